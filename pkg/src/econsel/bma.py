"""Model averaging inside purchased predictor sets and cross-validated loss.

For a purchased set S the ensemble averages over the ``2**|S|`` submodels of
S, weighting each by its marginal likelihood times its prior probability.
Cross-validated loss is tabulated for every purchased set of the universe at
once: all ``2**p`` subsets are fitted per fold and the per-set ensemble
predictions are obtained with a weighted zeta transform.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np
from scipy.special import logsumexp

from .dataset import Dataset, FoldPlan, column_moments, standardize
from .errors import CollinearityError, InsufficientDataError, NumericError, ShapeError
from .gprior import GPriorConfig, ModelFit, TrainingMoments, fit_from_moments, predict_mean
from .lattice import (
    PredictorSet,
    check_capacity,
    lattice_weighted_mean,
    membership,
    members_of,
    popcount,
    popcounts,
    submasks,
)

log = logging.getLogger(__name__)

WEIGHT_FLOOR = 1e-15


@dataclass(frozen=True)
class Ensemble:
    """Normalized posterior weights over the submodels of a purchased set.

    ``weights`` maps submodel bitmask to probability; ``inclusion`` maps each
    purchased predictor index to its posterior inclusion probability.
    """

    purchased: int
    weights: Dict[int, float]
    inclusion: Dict[int, float]

    def inclusion_vector(self, p: int) -> np.ndarray:
        out = np.zeros(p)
        for j, v in self.inclusion.items():
            out[j] = v
        return out


@dataclass
class CvLossTable:
    """Cross-validated squared predictive loss for every purchased set.

    Row ``bits`` of ``fold_losses`` holds the per-fold losses of purchased
    set ``bits``. ``full_log_weight`` holds log evidence plus log prior of
    every subset fitted on the whole dataset; it drives the displayed
    inclusion probabilities. ``excluded`` flags subsets dropped for
    collinearity on some training split.
    """

    names: tuple
    fold_losses: np.ndarray
    full_log_weight: np.ndarray
    excluded: np.ndarray
    fold_sizes: Optional[np.ndarray] = None

    @property
    def p(self) -> int:
        return len(self.names)

    @property
    def loss(self) -> np.ndarray:
        return self.fold_losses.mean(axis=1)

    def __len__(self) -> int:
        return self.fold_losses.shape[0]

    def inclusion(self, bits: int) -> np.ndarray:
        """Full-data inclusion probabilities within purchased set ``bits``."""
        ens = ensemble_for(bits, self.full_log_weight)
        return ens.inclusion_vector(self.p)

    def inclusion_all(self) -> np.ndarray:
        """Inclusion probabilities for every purchased set, shape ``(2**p, p)``."""
        incl = lattice_weighted_mean(self.full_log_weight, membership(self.p).astype(float))
        return np.clip(incl, 0.0, 1.0)

    def least_loss(self, without: int = 0) -> tuple:
        """Least loss over purchased sets disjoint from ``without``; returns (bits, loss)."""
        loss = self.loss
        bits = np.arange(len(loss))
        ok = (bits & without) == 0
        ranked = rank_sets(self, mask=ok)
        best = ranked[0][0].bits
        return best, float(loss[best])


def log_prior_weights(p: int, cfg: GPriorConfig) -> np.ndarray:
    """Log prior model weight of every subset, up to a set-independent constant."""
    return popcounts(p) * cfg.log_prior_odds()


def fit_all_subsets(d: Dataset, cfg: GPriorConfig = GPriorConfig()) -> Dict[int, ModelFit]:
    """Fit every subset of the universe on ``d``; collinear subsets are left out."""
    check_capacity(d.p)
    mom = TrainingMoments.from_arrays(d.predictors, d.response)
    g = cfg.g_for(d.n)
    fits = {}
    for bits in range(1 << d.p):
        try:
            fits[bits] = fit_from_moments(mom, bits, g)
        except CollinearityError:
            log.warning("subset %s is collinear and is left out", list(members_of(bits)))
    return fits


def full_space_log_weights(fits: Mapping[int, ModelFit], p: int,
                           cfg: GPriorConfig = GPriorConfig()) -> np.ndarray:
    lw = np.full(1 << p, -np.inf)
    prior = log_prior_weights(p, cfg)
    for bits, fit in fits.items():
        lw[bits] = fit.log_ml + prior[bits]
    return lw


def ensemble_for(purchased, logml, prior: Optional[float] = None) -> Ensemble:
    """Posterior weights over the submodels of ``purchased``.

    ``logml`` is indexable by subset bitmask (array or mapping). Missing or
    ``-inf`` entries mark unusable (collinear) subsets. With ``prior`` given,
    each predictor in a submodel adds ``log(prior / (1 - prior))``; otherwise
    ``logml`` is taken to already include the prior.
    """
    bits = purchased.bits if isinstance(purchased, PredictorSet) else int(purchased)
    odds = 0.0 if prior is None else float(np.log(prior) - np.log1p(-prior))
    subs, vals = [], []
    for sub in submasks(bits):
        try:
            v = float(logml[sub])
        except (KeyError, IndexError):
            continue
        if np.isfinite(v):
            subs.append(sub)
            vals.append(v + odds * popcount(sub))
    if not subs:
        raise NumericError(f"no usable submodel inside purchased set {list(members_of(bits))}")
    vals = np.array(vals)
    w = np.exp(vals - logsumexp(vals))
    weights = dict(sorted(zip(subs, w.tolist())))
    inclusion = {j: min(1.0, float(sum(v for s, v in weights.items() if s >> j & 1)))
                 for j in members_of(bits)}
    return Ensemble(bits, weights, inclusion)


def bma_predict(ens: Ensemble, fits: Mapping[int, ModelFit], newx) -> np.ndarray:
    """Model-averaged predictive mean.

    ``newx`` holds all universe columns (``m x p``); each submodel reads its
    own columns. Submodels with weight below ``WEIGHT_FLOOR`` are skipped.
    """
    newx = np.atleast_2d(np.asarray(newx, dtype=float))
    out = np.zeros(newx.shape[0])
    for sub, w in ens.weights.items():
        if w < WEIGHT_FLOOR:
            continue
        fit = fits.get(sub)
        if fit is None:
            raise NumericError(
                f"no fit for submodel {list(members_of(sub))} with weight {w:.3g}")
        out += w * predict_mean(fit, newx[:, list(fit.columns)])
    return out


def _fold_design(d: Dataset, folds: FoldPlan, fold: int, per_fold_scaling: bool):
    tr = folds.training_index(fold)
    va = folds.validation_index(fold)
    Xtr, Xva = d.predictors[tr], d.predictors[va]
    if per_fold_scaling:
        mean, sd = column_moments(Xtr, d.names)
        Xtr = (Xtr - mean) / sd
        Xva = (Xva - mean) / sd
    return Xtr, d.response[tr], Xva, d.response[va]


def _fit_fold(d, folds, fold, cfg, per_fold_scaling):
    """Evidence and validation predictions of every subset on one fold."""
    Xtr, ytr, Xva, yva = _fold_design(d, folds, fold, per_fold_scaling)
    p = d.p
    mom = TrainingMoments.from_arrays(Xtr, ytr)
    g = cfg.g_for(len(ytr))
    logml = np.full(1 << p, -np.inf)
    preds = np.zeros((1 << p, len(yva)))
    collinear = []
    for bits in range(1 << p):
        try:
            fit = fit_from_moments(mom, bits, g)
        except CollinearityError:
            collinear.append(bits)
            continue
        logml[bits] = fit.log_ml
        preds[bits] = predict_mean(fit, Xva[:, list(fit.columns)])
    return logml, preds, yva, collinear


def cv_loss_all_sets(d: Dataset, folds: FoldPlan, cfg: GPriorConfig = GPriorConfig(),
                     per_fold_scaling: bool = False, threads: int = 1) -> CvLossTable:
    """Cross-validated ensemble loss of every purchased set of the universe.

    ``d`` should already be standardized unless ``per_fold_scaling`` is set,
    in which case each training split is standardized on its own moments and
    the validation split reuses them.
    """
    check_capacity(d.p)
    if len(folds.assignment) != d.n:
        raise ShapeError(f"fold plan covers {len(folds.assignment)} cases, dataset has {d.n}")
    smallest = d.n - int(folds.sizes().max())
    if smallest <= d.p + 3:
        raise InsufficientDataError(
            f"training splits of {smallest} cases cannot fit all {d.p} predictors")

    def run(fold):
        return _fit_fold(d, folds, fold, cfg, per_fold_scaling)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_fold = list(pool.map(run, range(folds.fold_count)))
    else:
        per_fold = [run(f) for f in range(folds.fold_count)]

    excluded = np.zeros(1 << d.p, dtype=bool)
    for _, _, _, collinear in per_fold:
        excluded[collinear] = True
    if excluded.any():
        log.warning("%d collinear subsets excluded from every ensemble", int(excluded.sum()))

    prior = log_prior_weights(d.p, cfg)
    fold_losses = np.empty((1 << d.p, folds.fold_count))
    for f, (logml, preds, yva, _) in enumerate(per_fold):
        lw = np.where(excluded, -np.inf, logml + prior)
        ens_pred = lattice_weighted_mean(lw, preds)
        resid = ens_pred - yva[None, :]
        fold_losses[:, f] = np.einsum("ij,ij->i", resid, resid) / len(yva)

    full = fit_all_subsets(standardize(d) if per_fold_scaling else d, cfg)
    full_lw = full_space_log_weights(full, d.p, cfg)
    full_lw[excluded] = -np.inf
    return CvLossTable(tuple(d.names), fold_losses, full_lw, excluded, folds.sizes())


def rank_sets(table: CvLossTable, mask=None) -> list:
    """Purchased sets in ascending loss order.

    Ties go to the set with fewer predictors, then the smaller bitmask.
    ``mask`` optionally restricts the ranking to flagged sets.
    """
    loss = table.loss
    bits = np.arange(len(loss))
    if mask is not None:
        bits = bits[np.asarray(mask, dtype=bool)]
    sizes = popcounts(table.p)[bits]
    order = np.lexsort((bits, sizes, loss[bits]))
    return [(PredictorSet(int(b), table.p), float(loss[b])) for b in bits[order]]
