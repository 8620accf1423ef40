"""Predictor sets as bitmasks and aggregation over the subset lattice."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapacityError

MAX_PREDICTORS = 24


@dataclass(frozen=True, order=True)
class PredictorSet:
    """A subset of ``p`` predictors; bit ``j`` set means predictor ``j`` is in."""

    bits: int
    p: int

    def __post_init__(self):
        if not 0 <= self.p <= MAX_PREDICTORS:
            raise CapacityError(f"universe of {self.p} predictors exceeds cap {MAX_PREDICTORS}")
        if not 0 <= self.bits < (1 << self.p):
            raise ValueError(f"bitmask {self.bits} outside a universe of {self.p}")

    @classmethod
    def from_members(cls, members: Iterable[int], p: int) -> "PredictorSet":
        bits = 0
        for j in members:
            bits |= 1 << j
        return cls(bits, p)

    @property
    def members(self) -> tuple:
        return members_of(self.bits)

    def __len__(self) -> int:
        return popcount(self.bits)

    def __contains__(self, j: int) -> bool:
        return bool(self.bits >> j & 1)

    def issubset(self, other: "PredictorSet") -> bool:
        return self.bits & ~other.bits == 0

    def labels(self, names: Sequence[str]) -> list:
        return [names[j] for j in self.members]


def popcount(bits: int) -> int:
    return bin(bits).count("1")


def members_of(bits: int) -> tuple:
    out = []
    j = 0
    while bits:
        if bits & 1:
            out.append(j)
        bits >>= 1
        j += 1
    return tuple(out)


def popcounts(p: int) -> np.ndarray:
    """Set sizes for every bitmask ``0 .. 2**p - 1``."""
    sizes = np.zeros(1 << p, dtype=np.int64)
    for j in range(p):
        sizes[1 << j:1 << (j + 1)] = sizes[:1 << j] + 1
    return sizes


def membership(p: int) -> np.ndarray:
    """Boolean matrix ``(2**p, p)``; row ``bits`` flags the members of ``bits``."""
    masks = np.arange(1 << p)[:, None]
    return (masks >> np.arange(p)[None, :] & 1).astype(bool)


def check_capacity(p: int) -> None:
    if not 1 <= p <= MAX_PREDICTORS:
        raise CapacityError(
            f"exhaustive enumeration supports 1..{MAX_PREDICTORS} predictors, got {p}")


def enumerate_subsets(p: int) -> Iterator[PredictorSet]:
    """All ``2**p`` subsets in increasing bitmask order."""
    check_capacity(p)
    return (PredictorSet(bits, p) for bits in range(1 << p))


def submasks(bits: int) -> Iterator[int]:
    """Every submask of ``bits``, including 0 and ``bits`` itself."""
    sub = bits
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & bits


def _universe_size(n_entries: int) -> int:
    p = n_entries.bit_length() - 1
    if n_entries != 1 << p:
        raise ValueError(f"table length {n_entries} is not a power of two")
    return p


def fast_lattice_aggregate(values, combine=np.add) -> np.ndarray:
    """Reduce ``values`` over all submasks of every set (zeta transform).

    ``values`` has the subset axis first (length ``2**p``); trailing axes are
    carried along. ``combine`` must be an associative, commutative, vectorized
    binary function such as ``np.add``, ``np.maximum`` or ``np.logaddexp``.
    Runs in ``p * 2**p`` combine steps.
    """
    out = np.array(values, dtype=float, copy=True)
    p = _universe_size(out.shape[0])
    rest = out.shape[1:]
    for j in range(p):
        view = out.reshape((1 << (p - j - 1), 2, 1 << j) + rest)
        view[:, 1] = combine(view[:, 1], view[:, 0])
    return out


def lattice_weighted_mean(log_weights, values) -> np.ndarray:
    """For every set S, the mean of ``values`` over submasks weighted by ``exp(log_weights)``.

    Weights are carried as (log scale, scaled sum) pairs so that sets whose
    submasks all have tiny weights stay finite. Entries with ``-inf`` log
    weight contribute nothing. Returns an array shaped like ``values``; a
    set with no finite-weight submask yields ``nan``.
    """
    lw = np.array(log_weights, dtype=float)
    vals = np.asarray(values, dtype=float)
    p = _universe_size(lw.shape[0])
    if vals.shape[0] != lw.shape[0]:
        raise ValueError("log_weights and values disagree on the subset axis")
    trailing = vals.shape[1:]
    flat = vals.reshape(vals.shape[0], -1)
    finite = np.isfinite(lw)
    # column 0 accumulates the normalizer, the rest the weighted values
    acc = np.empty((flat.shape[0], flat.shape[1] + 1))
    acc[:, 0] = finite
    acc[:, 1:] = np.where(finite[:, None], flat, 0.0)
    scale = np.where(finite, lw, -np.inf)
    for j in range(p):
        s_view = scale.reshape(1 << (p - j - 1), 2, 1 << j)
        a_view = acc.reshape(1 << (p - j - 1), 2, 1 << j, acc.shape[1])
        hi, lo = s_view[:, 1], s_view[:, 0]
        top = np.maximum(hi, lo)
        safe_top = np.where(np.isfinite(top), top, 0.0)
        f_hi = np.where(np.isfinite(hi), np.exp(hi - safe_top), 0.0)
        f_lo = np.where(np.isfinite(lo), np.exp(lo - safe_top), 0.0)
        a_view[:, 1] = a_view[:, 1] * f_hi[..., None] + a_view[:, 0] * f_lo[..., None]
        s_view[:, 1] = top
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = acc[:, 1:] / acc[:, :1]
    return mean.reshape(vals.shape[0], *trailing)
