import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from econsel.bma import CvLossTable, cv_loss_all_sets, rank_sets
from econsel.dataset import make_folds
from econsel.econ import (
    GroupedCost,
    ItemizedCost,
    TimedPurchaseProblem,
    UniformCost,
    cost_sweep,
    evaluate_cost,
    free_set_family,
    grouped_family,
    optimal_purchase_wave,
    optimal_set,
    timed_objective,
    uniform_family,
)
from econsel.errors import ConfigError
from econsel.lattice import PredictorSet, popcounts

from conftest import make_data


def loss_table(losses, p):
    losses = np.asarray(losses, dtype=float)
    return CvLossTable(tuple(f"x{j + 1}" for j in range(p)), losses[:, None],
                       np.zeros(1 << p), np.zeros(1 << p, dtype=bool))


def random_table(seed, p=5):
    rng = np.random.default_rng(seed)
    return loss_table(rng.uniform(1, 2, 1 << p), p)


class TestCosts:
    def test_uniform(self):
        assert evaluate_cost(UniformCost(2.0), PredictorSet(0b111, 3)) == 6.0

    def test_grouped_charged_once(self):
        # six serum measures x5..x10 (indices 4..9) share one price
        cm = GroupedCost([range(4, 10)], 5.0)
        assert evaluate_cost(cm, PredictorSet.from_members([0, 6], 10)) == 5.0
        assert evaluate_cost(cm, PredictorSet.from_members([4, 5, 8], 10)) == 5.0
        assert evaluate_cost(cm, PredictorSet.from_members([0, 2], 10)) == 0.0

    def test_free_set(self):
        c = 0.3
        cm = free_set_family(10, [1, 2, 3, 8, 9])(c)
        assert evaluate_cost(cm, PredictorSet.from_members([3, 4], 10)) == c

    def test_empty_is_free(self):
        for cm in (UniformCost(1.0), ItemizedCost([1, 2]), GroupedCost([[0, 1]], 3.0)):
            assert cm.evaluate(0) == 0.0

    @pytest.mark.parametrize("cm", [UniformCost(0.7), ItemizedCost([0.1, 0, 2.5, 1.0]),
                                    GroupedCost([[0, 2]], 1.5, (0.3, 0.2, 9.0, 0.4))])
    def test_vectorized_matches_scalar(self, cm):
        np.testing.assert_allclose(cm.all_costs(4), [cm.evaluate(b) for b in range(16)])

    def test_validation(self):
        with pytest.raises(ConfigError):
            UniformCost(-1.0)
        with pytest.raises(ConfigError):
            GroupedCost([[0, 1], [1, 2]], 1.0)


class TestOptimalSet:
    def test_zero_cost_is_least_loss(self):
        t = random_table(3)
        assert optimal_set(t).optimum == rank_sets(t)[0][0]
        assert optimal_set(t, UniformCost(0.0)).optimum == rank_sets(t)[0][0]

    def test_huge_price_buys_nothing(self):
        t = random_table(4)
        assert optimal_set(t, UniformCost(10.0)).optimum.bits == 0

    def test_hand(self):
        # sets {} and {x1}: losses 1.0 and 0.9, price 0.2 per predictor
        res = optimal_set(loss_table([1.0, 0.9], 1), UniformCost(0.2))
        assert res.optimum.bits == 0
        assert res.optimum_total == 1.0
        assert res.total[1] == pytest.approx(1.1)

    def test_tie_prefers_lower_cost(self):
        res = optimal_set(loss_table([1.0, 0.8, 0.7, 0.6], 2), ItemizedCost([0.2, 0.3]))
        # totals 1.0, 1.0, 1.0, 1.1: the empty set costs least
        assert res.optimum.bits == 0
        assert [s.bits for s, *_ in res.entries(3)] == [0, 1, 2]

    def test_total_is_loss_plus_cost(self):
        res = optimal_set(random_table(5), ItemizedCost([0.1, 0.2, 0.0, 0.05, 0.3]))
        for s, loss, cost, total in res.entries():
            assert abs(total - (loss + cost)) <= 1e-12

    def test_inclusion_from_real_table(self):
        d = make_data(n=60, p=3, seed=1)
        t = cv_loss_all_sets(d, make_folds(d.n, 10, 0))
        res = optimal_set(t)
        assert res.inclusion.shape == (3,)
        assert np.all(res.inclusion[[j for j in range(3) if j not in res.optimum]] == 0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 10))
    def test_scale_invariance(self, seed, lam):
        rng = np.random.default_rng(seed)
        losses = rng.uniform(1, 2, 16)
        prices = rng.uniform(0, 0.3, 4)
        a = optimal_set(loss_table(losses, 4), ItemizedCost(prices)).optimum
        b = optimal_set(loss_table(losses * lam, 4), ItemizedCost(prices * lam)).optimum
        assert a == b

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_dominated_costs_give_lower_total(self, seed):
        rng = np.random.default_rng(seed)
        t = loss_table(rng.uniform(1, 2, 16), 4)
        p1 = rng.uniform(0, 0.2, 4)
        p2 = p1 + rng.uniform(0, 0.2, 4)
        assert (optimal_set(t, ItemizedCost(p1)).optimum_total
                <= optimal_set(t, ItemizedCost(p2)).optimum_total)


class TestSweep:
    def test_price_zero_is_least_loss(self):
        t = random_table(8)
        assert cost_sweep(t, uniform_family(), [0.0])[0].optimum == rank_sets(t)[0][0]

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_uniform_sizes_non_increasing(self, seed):
        t = random_table(seed, p=5)
        grid = np.linspace(0, 0.5, 20)
        sizes = [len(r.optimum) for r in cost_sweep(t, uniform_family(), grid)]
        assert all(b <= a for a, b in zip(sizes, sizes[1:]))

    def test_grouped_family_drops_group(self):
        # losses favour {x1, x2}; x2 is in a priced group
        losses = np.array([2.0, 1.5, 1.4, 1.0])
        sweep = cost_sweep(loss_table(losses, 2), grouped_family([[1]]), [0.0, 0.2, 1.0])
        assert [r.optimum.bits for r in sweep] == [3, 3, 1]

    def test_descending_grid_rejected(self):
        with pytest.raises(ConfigError):
            cost_sweep(random_table(0), uniform_family(), [0.2, 0.1])


class TestTiming:
    def test_undiscounted_full_purchase(self):
        prob = TimedPurchaseProblem([3, 2, 1], [2, 1, 0.5])
        assert timed_objective(prob, 1) == 3.5

    def test_no_purchase_ignores_price(self):
        prob = TimedPurchaseProblem([3, 2, 1], [2, 1, 0.5], delta=0.1, c=50.0)
        assert timed_objective(prob, 4) == pytest.approx(3 + 2 / 1.1 + 1 / 1.21, rel=1e-15)

    def test_hand(self):
        prob = TimedPurchaseProblem([1, 1, 1], [1, 0.5, 0.5], delta=0.1, c=0.2)
        assert timed_objective(prob, 2) == pytest.approx(1 + 0.5 / 1.1 + 0.5 / 1.21 + 0.2 / 1.1,
                                                         rel=1e-14)
        assert timed_objective(prob, 2) == pytest.approx(2.0495867768595, rel=1e-12)

    def test_out_of_range(self):
        prob = TimedPurchaseProblem([1], [1])
        for t in (0, 3):
            with pytest.raises(ConfigError):
                timed_objective(prob, t)

    def test_first_four_waves_tie(self):
        l = [0.30, 0.31, 0.29, 0.30, 0.33, 0.35, 0.34]
        # buying only helps from wave 4 on, so waves 1..4 tie
        ls = l[:3] + [0.29, 0.30, 0.31, 0.32]
        sol = optimal_purchase_wave(TimedPurchaseProblem(l, ls))
        assert sol.minimizers == (1, 2, 3, 4)
        assert sol.wave == 1

    def test_enormous_price_means_no_purchase(self):
        sol = optimal_purchase_wave(TimedPurchaseProblem([1, 1, 1], [0.5, 0.5, 0.5], c=1e6))
        assert sol.no_purchase and sol.wave == 4

    def test_rejects_worse_with_purchase(self):
        with pytest.raises(ConfigError):
            TimedPurchaseProblem([1.0], [1.5])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 15))
    def test_free_undiscounted_curve_non_decreasing(self, seed, T):
        rng = np.random.default_rng(seed)
        l = rng.uniform(0.5, 1, T)
        ls = l - rng.uniform(0, 0.3, T) * (rng.random(T) < 0.6)
        curve = optimal_purchase_wave(TimedPurchaseProblem(l, ls)).curve
        assert np.all(np.diff(curve) >= -1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0, 0.5))
    def test_higher_price_never_earlier(self, seed, delta):
        rng = np.random.default_rng(seed)
        T = 10
        l = rng.uniform(0.5, 1, T)
        ls = l - rng.uniform(0, 0.1, T)
        waves = [optimal_purchase_wave(TimedPurchaseProblem(l, ls, delta, c)).wave
                 for c in np.linspace(0, 1, 15)]
        assert all(b >= a for a, b in zip(waves, waves[1:]))
