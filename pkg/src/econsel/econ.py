"""Predictor costs and the economic decisions built on cross-validated loss."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bma import CvLossTable
from .errors import ConfigError
from .lattice import PredictorSet, members_of, popcounts


class CostModel:
    """Maps a purchased predictor set to its price."""

    def evaluate(self, bits: int) -> float:
        raise NotImplementedError

    def all_costs(self, p: int) -> np.ndarray:
        """Cost of every bitmask ``0 .. 2**p - 1``."""
        return np.array([self.evaluate(b) for b in range(1 << p)])


@dataclass(frozen=True)
class UniformCost(CostModel):
    price: float

    def __post_init__(self):
        if self.price < 0:
            raise ConfigError(f"negative price {self.price}")

    def evaluate(self, bits):
        return self.price * bin(bits).count("1")

    def all_costs(self, p):
        return self.price * popcounts(p).astype(float)


@dataclass(frozen=True)
class ItemizedCost(CostModel):
    prices: tuple

    def __post_init__(self):
        object.__setattr__(self, "prices", tuple(float(c) for c in self.prices))
        if any(c < 0 for c in self.prices):
            raise ConfigError("predictor prices must be nonnegative")

    def evaluate(self, bits):
        return float(sum(self.prices[j] for j in members_of(bits)))

    def all_costs(self, p):
        out = np.zeros(1 << p)
        for j in range(p):
            # bit j set in the upper half of every 2**(j+1) block
            view = out.reshape(-1, 2, 1 << j)
            view[:, 1] += self.prices[j]
        return out


@dataclass(frozen=True)
class GroupedCost(CostModel):
    """Each group is charged ``group_price`` once if any member is bought.

    Predictors outside every group are charged their ``prices`` entry.
    """

    groups: tuple
    group_price: float
    prices: tuple = ()

    def __post_init__(self):
        groups = tuple(tuple(sorted(int(j) for j in g)) for g in self.groups)
        seen = set()
        for g in groups:
            if seen & set(g):
                raise ConfigError("cost groups must be disjoint")
            seen |= set(g)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "prices", tuple(float(c) for c in self.prices))
        if self.group_price < 0 or any(c < 0 for c in self.prices):
            raise ConfigError("prices must be nonnegative")

    def _group_masks(self):
        return [sum(1 << j for j in g) for g in self.groups]

    def _item_price(self, j):
        if any(j in g for g in self.groups):
            return 0.0
        return self.prices[j] if j < len(self.prices) else 0.0

    def evaluate(self, bits):
        item = sum(self._item_price(j) for j in members_of(bits))
        grouped = sum(self.group_price for m in self._group_masks() if bits & m)
        return float(item + grouped)

    def all_costs(self, p):
        masks = np.arange(1 << p)
        out = ItemizedCost([self._item_price(j) for j in range(p)]).all_costs(p)
        for m in self._group_masks():
            out = out + self.group_price * ((masks & m) != 0)
        return out


def evaluate_cost(cm: CostModel, s) -> float:
    bits = s.bits if isinstance(s, PredictorSet) else int(s)
    return float(cm.evaluate(bits))


def uniform_family() -> Callable[[float], CostModel]:
    return UniformCost


def free_set_family(p: int, free: Sequence[int]) -> Callable[[float], CostModel]:
    """Predictors in ``free`` cost nothing; every other one costs the knob price."""
    free = set(free)
    return lambda c: ItemizedCost([0.0 if j in free else c for j in range(p)])


def scaled_family(prices: Sequence[float]) -> Callable[[float], CostModel]:
    return lambda c: ItemizedCost([c * v for v in prices])


def grouped_family(groups, prices: Sequence[float] = ()) -> Callable[[float], CostModel]:
    return lambda c: GroupedCost(tuple(groups), c, tuple(prices))


@dataclass
class SelectionOutcome:
    """Purchased sets ranked by total (loss + cost) with the optimum's inclusion."""

    p: int
    order: np.ndarray
    loss: np.ndarray
    cost: np.ndarray
    inclusion: np.ndarray
    price: Optional[float] = None

    @property
    def total(self) -> np.ndarray:
        return self.loss + self.cost

    @property
    def optimum(self) -> PredictorSet:
        return PredictorSet(int(self.order[0]), self.p)

    @property
    def optimum_total(self) -> float:
        b = int(self.order[0])
        return float(self.loss[b] + self.cost[b])

    def entries(self, top: Optional[int] = None):
        """Yield ``(PredictorSet, loss, cost, total)`` in rank order."""
        order = self.order if top is None else self.order[:top]
        for b in order:
            b = int(b)
            yield (PredictorSet(b, self.p), float(self.loss[b]), float(self.cost[b]),
                   float(self.loss[b] + self.cost[b]))


def optimal_set(table: CvLossTable, cm: Optional[CostModel] = None) -> SelectionOutcome:
    """Minimize loss plus cost over all purchased sets.

    Ties go to lower cost, then fewer predictors, then the smaller bitmask.
    """
    p = table.p
    loss = table.loss
    cost = np.zeros_like(loss) if cm is None else cm.all_costs(p)
    bits = np.arange(len(loss))
    order = np.lexsort((bits, popcounts(p), cost, loss + cost))
    return SelectionOutcome(p, order, loss, cost, table.inclusion(int(order[0])),
                            getattr(cm, "price", None))


def cost_sweep(table: CvLossTable, family: Callable[[float], CostModel],
               grid: Sequence[float]) -> list:
    """Optimal purchased set at every price of an ascending grid."""
    grid = [float(c) for c in grid]
    if not grid:
        raise ConfigError("sweep grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError("sweep grid must be ascending")
    out = []
    for c in grid:
        res = optimal_set(table, family(c))
        res.price = c
        out.append(res)
    return out


@dataclass(frozen=True)
class TimedPurchaseProblem:
    """Per-wave least losses without (``l``) and with (``l_star``) the predictor."""

    l: tuple
    l_star: tuple
    delta: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        l = tuple(float(v) for v in self.l)
        ls = tuple(float(v) for v in self.l_star)
        if len(l) != len(ls) or not l:
            raise ConfigError("loss sequences must be nonempty and of equal length")
        if self.delta < 0 or self.c < 0:
            raise ConfigError("discount factor and price must be nonnegative")
        if any(b > a + 1e-9 for a, b in zip(l, ls)):
            raise ConfigError("loss with the predictor cannot exceed loss without it")
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "l_star", ls)

    @property
    def T(self) -> int:
        return len(self.l)


def timed_objective(prob: TimedPurchaseProblem, t: int) -> float:
    """Discounted loss plus price when purchasing at the start of wave ``t``.

    ``t = T + 1`` means never purchasing.
    """
    T = prob.T
    if not 1 <= t <= T + 1:
        raise ConfigError(f"purchase wave {t} outside 1..{T + 1}")
    total = 0.0
    for s in range(1, T + 1):
        loss = prob.l[s - 1] if s < t else prob.l_star[s - 1]
        total += loss / (1.0 + prob.delta) ** (s - 1)
    if t <= T:
        total += prob.c / (1.0 + prob.delta) ** (t - 1)
    return total


@dataclass(frozen=True)
class TimingSolution:
    wave: int
    objective: float
    curve: np.ndarray
    minimizers: tuple
    T: int

    @property
    def no_purchase(self) -> bool:
        return self.wave == self.T + 1


def optimal_purchase_wave(prob: TimedPurchaseProblem, rtol: float = 1e-12) -> TimingSolution:
    """Best purchase wave; every wave within ``rtol`` of the minimum is reported."""
    curve = np.array([timed_objective(prob, t) for t in range(1, prob.T + 2)])
    best = curve.min()
    tol = rtol * max(1.0, abs(best))
    minimizers = tuple(int(t) + 1 for t in np.flatnonzero(curve <= best + tol))
    return TimingSolution(minimizers[0], float(curve[minimizers[0] - 1]), curve,
                          minimizers, prob.T)
