"""Averaging over unpurchased predictors through a known Gaussian covariate law.

Also hosts a numerical check that, on orthogonal designs with ``g = n``,
augmenting two equal-size models with the same predictors widens the Bayes
factor in favour of the better-fitting one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .bma import CvLossTable, fit_all_subsets, full_space_log_weights
from .dataset import Dataset, synth_orthogonal
from .errors import ConfigError, DesignError, NumericError
from .gprior import GPriorConfig, ModelFit, fit_model, predict_mean
from .lattice import PredictorSet, members_of

WEIGHT_FLOOR = 1e-15


@dataclass(frozen=True)
class GaussianCovariateModel:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).ravel()
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise ConfigError(f"covariance shape {cov.shape} does not match mean length {mean.size}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise ConfigError("covariance matrix is not symmetric")
        if not np.linalg.eigvalsh(cov)[0] > 0:
            raise ConfigError("covariance matrix is not positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def p(self) -> int:
        return self.mean.size

    @classmethod
    def from_csv(cls, mean_path, cov_path) -> "GaussianCovariateModel":
        mean = np.loadtxt(mean_path, delimiter=",", ndmin=1)
        cov = np.loadtxt(cov_path, delimiter=",", ndmin=2)
        return cls(mean, cov)


def _bits_of(purchased) -> int:
    return purchased.bits if isinstance(purchased, PredictorSet) else int(purchased)


def conditional_law(cm: GaussianCovariateModel, purchased, x_values):
    """Mean and covariance of the unpurchased predictors given the purchased ones."""
    bits = _bits_of(purchased)
    obs = list(members_of(bits))
    hid = [j for j in range(cm.p) if not bits >> j & 1]
    if not hid:
        raise ConfigError("every predictor is purchased; nothing to condition")
    x = np.asarray(x_values, dtype=float).ravel()
    if x.size != len(obs):
        raise ConfigError(f"expected {len(obs)} purchased values, got {x.size}")
    mu_w = cm.mean[hid]
    S_ww = cm.cov[np.ix_(hid, hid)]
    if not obs:
        return mu_w.copy(), S_ww.copy()
    S_xx = cm.cov[np.ix_(obs, obs)]
    S_wx = cm.cov[np.ix_(hid, obs)]
    try:
        factor = linalg.cho_factor(S_xx)
    except linalg.LinAlgError:
        raise NumericError("covariance of purchased predictors is singular") from None
    mean = mu_w + S_wx @ linalg.cho_solve(factor, x - cm.mean[obs])
    cov = S_ww - S_wx @ linalg.cho_solve(factor, S_wx.T)
    return mean, (cov + cov.T) / 2


def _complete_rows(bits, x, hidden_rows, p):
    rows = np.empty((hidden_rows.shape[0], p))
    obs = list(members_of(bits))
    hid = [j for j in range(p) if not bits >> j & 1]
    rows[:, obs] = x
    rows[:, hid] = hidden_rows
    return rows


def _average_over_models(rows, fits, weights):
    """Per-row model-averaged prediction for completed covariate rows."""
    out = np.zeros(rows.shape[0])
    for bits, w in enumerate(weights):
        if not w > WEIGHT_FLOOR:
            continue
        fit = fits.get(bits)
        if fit is None:
            raise NumericError(f"no fit for model {list(members_of(bits))} with weight {w:.3g}")
        out += w * predict_mean(fit, rows[:, list(fit.columns)])
    return out


def extended_predict(purchased, x_values, fits: Mapping[int, ModelFit], weights,
                     cm: GaussianCovariateModel, draws: int = 0, seed: int = 0,
                     mode: str = "plugin") -> float:
    """Prediction averaging over all ``2**p`` models with unpurchased predictors imputed.

    ``weights`` is a normalized array over every subset bitmask. Every
    posterior mean is linear in the covariates, so ``mode="plugin"``
    evaluates at the conditional mean and is exact. ``mode="mc"`` averages
    over ``draws`` samples from the conditional law instead.
    """
    if mode == "mc":
        return monte_carlo_prediction(purchased, x_values, fits, weights, cm, draws, seed)[0]
    if mode != "plugin":
        raise ConfigError(f"unknown mode {mode!r}")
    bits = _bits_of(purchased)
    x = np.asarray(x_values, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float)
    if bits == (1 << cm.p) - 1:
        return float(_average_over_models(x[None, :], fits, weights)[0])
    mean, _ = conditional_law(cm, bits, x)
    rows = _complete_rows(bits, x, mean[None, :], cm.p)
    return float(_average_over_models(rows, fits, weights)[0])


def monte_carlo_prediction(purchased, x_values, fits, weights, cm, draws, seed):
    """Monte Carlo version of :func:`extended_predict`; returns (estimate, standard error)."""
    if draws < 1:
        raise ConfigError("need at least one draw")
    bits = _bits_of(purchased)
    x = np.asarray(x_values, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float)
    if bits == (1 << cm.p) - 1:
        return float(_average_over_models(x[None, :], fits, weights)[0]), 0.0
    mean, cov = conditional_law(cm, bits, x)
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(cov)
    hidden = mean + rng.standard_normal((draws, len(mean))) @ chol.T
    per_draw = _average_over_models(_complete_rows(bits, x, hidden, cm.p), fits, weights)
    se = float(per_draw.std(ddof=1) / math.sqrt(draws)) if draws > 1 else float("inf")
    return float(per_draw.mean()), se


@dataclass(frozen=True)
class AugmentationReport:
    """Bayes-factor comparison before and after a common augmentation.

    ``r2_b > r2_s`` by construction; ``delta`` is the R^2 gain from adding
    the same ``q`` orthogonal predictors to each base model.
    """

    n: int
    m: int
    q: int
    seed: int
    r2_b: float
    r2_s: float
    delta: float
    log_bf_base: float
    log_bf_aug: float
    closed_form: float

    @property
    def difference(self) -> float:
        return self.log_bf_aug - self.log_bf_base

    @property
    def verdict(self) -> bool:
        return self.log_bf_aug > self.log_bf_base

    @property
    def closed_form_gap(self) -> float:
        return abs(self.difference - self.closed_form)

    def passed(self, tol: float = 1e-8) -> bool:
        if self.delta > 1e-12:
            return self.verdict and self.closed_form_gap < tol
        return abs(self.difference) < tol


def closed_form_bf_shift(n: int, r2_b: float, r2_s: float, delta: float) -> float:
    """Change in ``log BF(b : s)`` when both models gain ``delta`` in R^2 (``g = n``)."""
    a = (n - 1) / 2.0
    return -a * (math.log(1 - delta / (1 + 1 / n - r2_b))
                 - math.log(1 - delta / (1 + 1 / n - r2_s)))


def _design(n, m, q, seed, zero_delta):
    rng = np.random.default_rng(seed)
    p = 2 * m + q
    beta = np.concatenate([rng.uniform(0.6, 1.0, m), rng.uniform(0.1, 0.5, m),
                           rng.uniform(0.3, 0.7, q)])
    d = synth_orthogonal(n, p, beta, sigma=1.0, seed=int(rng.integers(2**32)))
    X = d.predictors
    if zero_delta:
        # remove every trace of the augmenting columns from the response
        A = X[:, 2 * m:]
        y = X[:, :2 * m] @ beta[:2 * m] + rng.standard_normal(n)
        y = y - A @ np.linalg.lstsq(A, y, rcond=None)[0]
        d = Dataset(y, X, d.names)
    gram = X.T @ X
    off = gram - np.diag(np.diag(gram))
    if np.abs(off).max() > 1e-6:
        raise DesignError(f"synthetic design is not orthogonal (max |x_i . x_j| = {np.abs(off).max():.3g})")
    return d


def verify_augmentation_shift(n: int, m: int, q: int, seed: int, zero_delta: bool = False) -> AugmentationReport:
    """Compare ``log BF(b+q : s+q)`` with ``log BF(b : s)`` on an orthogonal design.

    Base models b and s use disjoint blocks of ``m`` predictors and share the
    ``q`` augmenting predictors. Evidence uses ``g = n``.
    """
    if m < 1 or q < 1:
        raise ConfigError("base size and augmentation size must be positive")
    if n <= 2 * m + q + 3:
        raise ConfigError(f"n = {n} too small for m = {m}, q = {q}")
    d = _design(n, m, q, seed, zero_delta)
    cfg = GPriorConfig()
    b_cols = list(range(m))
    s_cols = list(range(m, 2 * m))
    aug = list(range(2 * m, 2 * m + q))
    fb, fs = fit_model(d, b_cols, cfg), fit_model(d, s_cols, cfg)
    if fb.r2 < fs.r2:
        fb, fs = fs, fb
        b_cols, s_cols = s_cols, b_cols
    fbq, fsq = fit_model(d, b_cols + aug, cfg), fit_model(d, s_cols + aug, cfg)
    delta = fbq.r2 - fb.r2
    closed = closed_form_bf_shift(n, fb.r2, fs.r2, delta)
    return AugmentationReport(n, m, q, seed, fb.r2, fs.r2, delta,
                       fb.log_ml - fs.log_ml, fbq.log_ml - fsq.log_ml, closed)


def _linear_bma(fits, weights, p):
    """Intercept and coefficient vector of the (linear) model-averaged mean."""
    a = 0.0
    v = np.zeros(p)
    for bits, w in enumerate(weights):
        if not w > 0:
            continue
        fit = fits[bits]
        a += w * (fit.ybar - float(fit.x_center @ fit.slopes))
        v[list(fit.columns)] += w * fit.slopes
    return a, v


def extended_cv_loss_all_sets(d: Dataset, folds, cfg: GPriorConfig,
                              cm: GaussianCovariateModel):
    """Cross-validated loss of every purchased set under the extended approach.

    Every fold fits all ``2**p`` models on the full training split; for a
    purchased set the unpurchased columns of each validation case are
    replaced by their conditional mean under ``cm`` (exact, because the
    averaged predictor is linear). ``cm`` must describe the predictors on the
    scale of ``d``.
    """
    p = d.p
    if cm.p != p:
        raise ConfigError(f"covariate model has {cm.p} predictors, data has {p}")
    fold_losses = np.empty((1 << p, folds.fold_count))
    for f in range(folds.fold_count):
        tr, va = folds.training_index(f), folds.validation_index(f)
        fits = fit_all_subsets(d.subset_cases(tr), cfg)
        lw = full_space_log_weights(fits, p, cfg)
        weights = np.exp(lw - logsumexp(lw))
        a, v = _linear_bma(fits, weights, p)
        Xv, yv = d.predictors[va], d.response[va]
        for bits in range(1 << p):
            obs = list(members_of(bits))
            hid = [j for j in range(p) if not bits >> j & 1]
            pred = a + Xv[:, obs] @ v[obs]
            if hid:
                if obs:
                    K = linalg.solve(cm.cov[np.ix_(obs, obs)], cm.cov[np.ix_(obs, hid)],
                                     assume_a="pos").T
                    w_mean = cm.mean[hid] + (Xv[:, obs] - cm.mean[obs]) @ K.T
                else:
                    w_mean = np.broadcast_to(cm.mean[hid], (len(va), len(hid)))
                pred = pred + w_mean @ v[hid]
            resid = yv - pred
            fold_losses[bits, f] = resid @ resid / len(va)
    full = fit_all_subsets(d, cfg)
    full_lw = full_space_log_weights(full, p, cfg)
    return CvLossTable(tuple(d.names), fold_losses, full_lw,
                       ~np.isfinite(full_lw), folds.sizes())
