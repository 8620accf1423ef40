"""Data ingestion, standardization, fold plans and synthetic designs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DegeneratePredictorError,
    DesignError,
    FoldError,
    MissingInputError,
    ParseError,
)


@dataclass(frozen=True)
class Dataset:
    """Response vector, predictor matrix and labels.

    ``waves`` holds the panel time index (1..T) per case when present.
    Instances are treated as immutable; arrays are marked read-only.
    """

    response: np.ndarray
    predictors: np.ndarray
    names: tuple
    waves: Optional[np.ndarray] = None

    def __post_init__(self):
        y = np.array(self.response, dtype=float)
        X = np.array(self.predictors, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(len(y), 0)
        if X.shape[0] != y.shape[0]:
            raise DataError(
                f"response has {y.shape[0]} cases but predictors have {X.shape[0]}")
        if len(self.names) != X.shape[1]:
            raise DataError(f"{len(self.names)} names for {X.shape[1]} predictors")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("dataset contains non-finite values")
        y.flags.writeable = False
        X.flags.writeable = False
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "predictors", X)
        object.__setattr__(self, "names", tuple(self.names))
        if self.waves is not None:
            w = np.array(self.waves, dtype=int)
            w.flags.writeable = False
            object.__setattr__(self, "waves", w)

    @property
    def n(self) -> int:
        return self.response.shape[0]

    @property
    def p(self) -> int:
        return self.predictors.shape[1]

    def subset_cases(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        waves = None if self.waves is None else self.waves[idx]
        return Dataset(self.response[idx], self.predictors[idx], self.names, waves)

    def select_predictors(self, columns: Sequence[int]) -> "Dataset":
        columns = list(columns)
        return Dataset(self.response, self.predictors[:, columns],
                       tuple(self.names[j] for j in columns), self.waves)

    def wave(self, t: int) -> "Dataset":
        if self.waves is None:
            raise ConfigError("dataset has no wave column")
        return self.subset_cases(np.flatnonzero(self.waves == t))


@dataclass(frozen=True)
class FoldPlan:
    fold_count: int
    assignment: np.ndarray
    seed: int

    def validation_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def training_index(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != fold)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.fold_count)


def _parse_float(text, row, column):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(
            f"non-numeric cell {text!r} at row {row}, column {column!r}") from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite cell {text!r} at row {row}, column {column!r}")
    return value


def load_csv(path, response_column: str, predictor_columns: Sequence[str],
             wave_column: Optional[str] = None) -> Dataset:
    """Read a header-row CSV into a raw (unstandardized) :class:`Dataset`.

    Row order is preserved. Row numbers in error messages count the header
    as row 1.
    """
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"data file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"empty file: {path}")
        header = [h.strip() for h in header]
        wanted = [response_column, *predictor_columns]
        if wave_column is not None:
            wanted.append(wave_column)
        missing = [c for c in wanted if c not in header]
        if missing:
            raise ConfigError(f"{path}: missing column(s) {', '.join(missing)}")
        pos = {c: header.index(c) for c in wanted}

        ys, xs, ws = [], [], []
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: row {rowno} has {len(row)} fields, "
                                 f"expected {len(header)}")
            ys.append(_parse_float(row[pos[response_column]], rowno, response_column))
            xs.append([_parse_float(row[pos[c]], rowno, c) for c in predictor_columns])
            if wave_column is not None:
                w = _parse_float(row[pos[wave_column]], rowno, wave_column)
                if w != int(w) or w < 1:
                    raise ParseError(
                        f"wave label {w!r} at row {rowno} is not a positive integer")
                ws.append(int(w))
    if not ys:
        raise DataError(f"empty file: {path}")
    X = np.array(xs, dtype=float).reshape(len(ys), len(predictor_columns))
    return Dataset(np.array(ys), X, tuple(predictor_columns),
                   np.array(ws) if wave_column is not None else None)


def column_moments(X: np.ndarray, names=None):
    """Column means and sample standard deviations (divisor n-1)."""
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1)
    for j, s in enumerate(sd):
        if not s > 0:
            label = names[j] if names is not None else f"column {j}"
            raise DegeneratePredictorError(f"predictor {label} has zero variance")
    return mean, sd


def standardize(d: Dataset) -> Dataset:
    """Center each predictor and scale it to unit sample standard deviation.

    The response is left untouched.
    """
    mean, sd = column_moments(d.predictors, d.names)
    return replace(d, predictors=(d.predictors - mean) / sd)


def standardize_by_wave(d: Dataset) -> Dataset:
    """Standardize predictors separately within each wave."""
    if d.waves is None:
        return standardize(d)
    X = np.array(d.predictors)
    for t in np.unique(d.waves):
        rows = d.waves == t
        mean, sd = column_moments(X[rows], d.names)
        X[rows] = (X[rows] - mean) / sd
    return replace(d, predictors=X)


def make_folds(n: int, k: int = 10, seed: int = 0) -> FoldPlan:
    """Partition ``n`` cases into ``k`` folds whose sizes differ by at most one.

    A seeded Fisher-Yates shuffle of the case indices is dealt round-robin
    into folds, so the plan depends only on ``(seed, n, k)``.
    """
    if k < 2:
        raise FoldError(f"fold count must be at least 2, got {k}")
    if n < 2 * k:
        raise FoldError(f"{n} cases cannot fill {k} folds with at least 2 cases each")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    assignment = np.empty(n, dtype=int)
    assignment[order] = np.arange(n) % k
    assignment.flags.writeable = False
    return FoldPlan(k, assignment, seed)


def synth_orthogonal(n: int, p: int, beta, sigma: float = 1.0, seed: int = 0,
                     names=None) -> Dataset:
    """Synthetic regression data with exactly orthogonal standardized predictors.

    A seeded Gaussian matrix is column-centered and orthonormalized (QR), then
    scaled so that ``X'X = (n-1) I``. The response is ``X @ beta`` plus
    Gaussian noise with standard deviation ``sigma``.
    """
    if p < 1:
        raise DesignError("need at least one predictor")
    if n <= p + 1:
        # centering removes one dimension
        raise DesignError(f"cannot build {p} orthogonal centered columns from {n} cases")
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (p,):
        raise DesignError(f"beta must have length {p}")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n, p))
    Z -= Z.mean(axis=0)
    Q, _ = np.linalg.qr(Z)
    X = Q * math.sqrt(n - 1)
    y = X @ beta + sigma * rng.standard_normal(n)
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(p))
    return Dataset(y, X, names)
