"""Normal linear model with a Zellner g-prior: closed-form fits and evidence.

Model for a predictor subset with ``k`` columns::

    y_i = b0 + x_i' b1 + e_i,   e_i ~ N(0, s2)
    p(b0) ∝ 1,   b1 ~ N(0, g s2 (X'X)^-1),   p(s2) ∝ 1/s2

Predictors are centered on the training cases inside :func:`fit_model`, so the
intercept's posterior mean is the training response mean and the closed forms
below are exact even when a training split of globally standardized data is
not exactly centered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from .errors import CollinearityError, InsufficientDataError, ShapeError
from .lattice import PredictorSet, members_of

RCOND_FLOOR = 1e-12


@dataclass(frozen=True)
class GPriorConfig:
    """Prior settings.

    ``g=None`` means g equals the number of training cases of each fit.
    ``inclusion_prob`` is the prior probability that a predictor enters a model;
    0.5 gives a uniform prior over models.
    """

    g: Optional[float] = None
    inclusion_prob: float = 0.5

    def __post_init__(self):
        if self.g is not None and not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if not 0 < self.inclusion_prob < 1:
            raise ValueError(f"inclusion probability must lie in (0, 1), got {self.inclusion_prob}")

    def g_for(self, n_train: int) -> float:
        return float(n_train) if self.g is None else float(self.g)

    def log_prior_odds(self) -> float:
        """Log prior weight added per included predictor."""
        q = self.inclusion_prob
        return math.log(q) - math.log1p(-q)


@dataclass(frozen=True)
class TrainingMoments:
    """Centered sufficient statistics of a training sample."""

    n: int
    ybar: float
    dy2: float
    xbar: np.ndarray
    gram: np.ndarray
    xty: np.ndarray

    @classmethod
    def from_arrays(cls, X, y) -> "TrainingMoments":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n = y.shape[0]
        ybar = float(y.mean())
        yc = y - ybar
        xbar = X.mean(axis=0)
        Xc = X - xbar
        return cls(n, ybar, float(yc @ yc), xbar, Xc.T @ Xc, Xc.T @ yc)


@dataclass(frozen=True)
class ModelFit:
    """Posterior summary of one subset fitted on one training sample.

    ``b`` is the posterior mean with the intercept first. ``B`` (see
    :meth:`B`) is the posterior scale matrix; the coefficients follow a
    generalized t with ``n_train - 1`` degrees of freedom.
    """

    bits: int
    columns: tuple
    n_train: int
    g: float
    ybar: float
    dy2: float
    r2: float
    slopes: np.ndarray
    x_center: np.ndarray
    gram: np.ndarray
    log_ml: float = field(default=float("nan"))

    @property
    def k(self) -> int:
        return len(self.columns)

    @property
    def shrinkage(self) -> float:
        return self.g / (1.0 + self.g)

    @property
    def b(self) -> np.ndarray:
        return np.concatenate(([self.ybar], self.slopes))

    @property
    def S(self) -> float:
        return self.dy2 / (1.0 + self.g) * (1.0 + self.g * (1.0 - self.r2))

    def B(self) -> np.ndarray:
        k = self.k
        out = np.zeros((k + 1, k + 1))
        out[0, 0] = 1.0 / self.n_train
        if k:
            out[1:, 1:] = self.shrinkage * linalg.inv(self.gram)
        return out

    def posterior_cov(self) -> np.ndarray:
        """Posterior covariance of the coefficients, ``S / (n - 3) * B``."""
        if self.n_train <= 3:
            raise InsufficientDataError("posterior variance needs more than 3 cases")
        return self.S / (self.n_train - 3) * self.B()

    def ols_slopes(self) -> np.ndarray:
        return self.slopes / self.shrinkage


def _as_bits(subset: Union[PredictorSet, int, Sequence[int]]) -> int:
    if isinstance(subset, PredictorSet):
        return subset.bits
    if isinstance(subset, (int, np.integer)):
        return int(subset)
    bits = 0
    for j in subset:
        bits |= 1 << int(j)
    return bits


def fit_from_moments(mom: TrainingMoments, bits: int, g: float) -> ModelFit:
    """Fit subset ``bits`` from precomputed centered moments."""
    cols = members_of(bits)
    k = len(cols)
    n = mom.n
    if n <= k + 3:
        raise InsufficientDataError(
            f"{n} training cases are too few for a {k}-predictor model")
    if not mom.dy2 > 0:
        raise InsufficientDataError("training response has no variation")
    if k == 0:
        slopes = np.zeros(0)
        gram = np.zeros((0, 0))
        r2 = 0.0
    else:
        idx = np.array(cols)
        gram = mom.gram[np.ix_(idx, idx)]
        xty = mom.xty[idx]
        eig = np.linalg.eigvalsh(gram)
        if not eig[0] > RCOND_FLOOR * eig[-1]:
            raise CollinearityError(
                f"design for subset {list(cols)} is singular or nearly so", bits)
        ols = linalg.solve(gram, xty, assume_a="pos")
        explained = float(xty @ ols)
        r2 = min(max(explained / mom.dy2, 0.0), 1.0)
        slopes = g / (1.0 + g) * ols
    fit = ModelFit(bits, cols, n, g, mom.ybar, mom.dy2, r2, slopes,
                   mom.xbar[list(cols)] if k else np.zeros(0), gram)
    object.__setattr__(fit, "log_ml", log_marginal_likelihood(fit))
    return fit


def fit_model(train, subset, cfg: GPriorConfig = GPriorConfig()) -> ModelFit:
    """Fit one predictor subset on a training :class:`~econsel.dataset.Dataset`."""
    bits = _as_bits(subset)
    if bits >> train.p:
        raise ShapeError(f"subset {bits:#b} refers to predictors beyond {train.p}")
    mom = TrainingMoments.from_arrays(train.predictors, train.response)
    return fit_from_moments(mom, bits, cfg.g_for(train.n))


def null_log_marginal_likelihood(n: int, dy2: float) -> float:
    """Log evidence of the intercept-only model."""
    a = (n - 1) / 2.0
    return gammaln(a) - a * math.log(math.pi) - 0.5 * math.log(n) - a * math.log(dy2)


def log_marginal_likelihood(fit: ModelFit) -> float:
    """Log evidence ``log m(y | X)`` of a fitted subset, computed in log space."""
    n, k, g = fit.n_train, fit.k, fit.g
    a = (n - 1) / 2.0
    base = gammaln(a) - a * math.log(math.pi) - 0.5 * math.log(n) - a * math.log(fit.dy2)
    # the two g terms cancel exactly when k = 0 and R^2 = 0
    gain = (n - k - 1) / 2.0 * math.log1p(g) - a * math.log1p(g * (1.0 - fit.r2))
    return base + gain


def predict_mean(fit: ModelFit, newx) -> np.ndarray:
    """Posterior predictive mean ``X~ b`` for rows holding the subset's columns."""
    newx = np.asarray(newx, dtype=float)
    if newx.ndim == 1:
        newx = newx.reshape(1, -1) if fit.k else newx.reshape(-1, 0)
    if newx.shape[1] != fit.k:
        raise ShapeError(f"expected {fit.k} columns, got {newx.shape[1]}")
    if fit.k == 0:
        return np.full(newx.shape[0], fit.ybar)
    return fit.ybar + (newx - fit.x_center) @ fit.slopes


def squared_predictive_loss(y_valid, yhat) -> float:
    y_valid = np.asarray(y_valid, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y_valid.shape != yhat.shape or y_valid.ndim != 1 or y_valid.size == 0:
        raise ShapeError(f"cannot compare shapes {y_valid.shape} and {yhat.shape}")
    resid = y_valid - yhat
    return float(resid @ resid) / resid.size
