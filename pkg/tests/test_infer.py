import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import det_sub, random_psd
from dppkit import BudgetSpec, SamplerState, exact_map_bruteforce, greedy_map, mmr_select, sampled_map
from dppkit.infer import greedy_gains

seeds = st.integers(0, 2**32 - 1)


def unit(n, B):
    return BudgetSpec(np.ones(n), B)


# ---- greedy ----------------------------------------------------------------

def test_greedy_examples():
    res = greedy_map(np.diag([4.0, 2.0]), unit(2, 2))
    assert res.chosen == (0, 1) and res.order == (0, 1)
    assert math.exp(res.unnorm_log_det) == pytest.approx(8.0)
    # hand-computed gains: det 1 -> 4 (gain 3 per the empty-set convention), then 4 -> 8
    np.testing.assert_allclose(greedy_gains(np.diag([4.0, 2.0]), [0]), [0.0, 4.0])
    res = greedy_map(np.diag([4.0, 1.0]), unit(2, 1))
    assert res.chosen == (0,)
    assert res.status == "budget-exhausted"


def test_greedy_all_items_over_budget():
    res = greedy_map(np.diag([4.0, 2.0]), BudgetSpec([3.0, 5.0], 2.0))
    assert res.chosen == () and res.total_cost == 0.0 and res.unnorm_log_det == 0.0


def test_greedy_zero_cost_positive_gain_is_an_error():
    with pytest.raises(ValueError, match="zero cost"):
        greedy_map(np.diag([4.0, 2.0]), BudgetSpec([0.0, 1.0], 1.0))
    # a zero-cost item with negative gain is harmless
    res = greedy_map(np.diag([0.5, 2.0]), BudgetSpec([0.0, 1.0], 1.0), mode="nonneg")
    assert res.chosen == (1,)


def test_greedy_modes_and_ties():
    L = np.diag([3.0, 0.5, 3.0, 0.2])
    lit = greedy_map(L, unit(4, 10))
    assert lit.order == (0, 2, 1, 3) and lit.status == "converged"
    nn = greedy_map(L, unit(4, 10), mode="nonneg")
    assert nn.order == (0, 2) and nn.status == "gain-stopped"
    with pytest.raises(ValueError):
        greedy_map(L, unit(4, 1), mode="other")


def test_greedy_singular_continuation():
    # after a duplicate pick det(L_Y) is 0 and every further gain is 0
    L = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.5]])
    res = greedy_map(L, unit(3, 3))
    assert set(res.chosen) == {0, 1, 2}
    assert res.unnorm_log_det == -math.inf


@given(st.integers(1, 10), seeds, st.sampled_from(["literal", "nonneg"]))
def test_greedy_feasibility_and_consistency(n, seed, mode):
    rng = np.random.default_rng(seed)
    L = random_psd(rng, n) + 1e-3 * np.eye(n)
    costs = rng.uniform(0.1, 2.0, size=n)
    B = float(rng.uniform(0, costs.sum()))
    res = greedy_map(L, BudgetSpec(costs, B), mode=mode)
    assert res.total_cost <= B + 1e-12
    spent = 0.0
    for i in res.order:
        assert spent + costs[i] <= B + 1e-12
        spent += costs[i]
    assert res.chosen == tuple(sorted(res.order))
    if res.chosen:
        ld = np.linalg.slogdet(L[np.ix_(res.chosen, res.chosen)])[1]
        assert res.unnorm_log_det == pytest.approx(ld, abs=1e-8)


@given(st.integers(2, 9), seeds)
def test_incremental_gains_match_scratch(n, seed):
    rng = np.random.default_rng(seed)
    L = random_psd(rng, n) + 0.05 * np.eye(n)
    Y = list(rng.permutation(n)[: int(rng.integers(0, n))])
    gains = greedy_gains(L, Y)
    base = det_sub(L, sorted(Y))
    for i in range(n):
        if i in Y:
            continue
        scratch = det_sub(L, sorted(Y + [i])) - base
        assert gains[i] == pytest.approx(scratch, rel=1e-8, abs=1e-12 * max(1.0, base))


def test_greedy_beats_best_single_item(rng):
    # Holds for the nonneg stopping rule.  The literal rule keeps packing
    # items whose gain is negative and routinely ends below the best single
    # item, so for it only the ratio to the exact optimum is checked.
    for _ in range(20):
        n = 12
        L = random_psd(rng, n)
        costs = rng.uniform(0.5, 2.0, size=n)
        spec = BudgetSpec(costs, costs.sum() / 2)
        exact = exact_map_bruteforce(L, spec)
        best_single = max(math.log(L[i, i]) for i in range(n) if costs[i] <= spec.budget)
        res = greedy_map(L, spec, mode="nonneg")
        assert res.unnorm_log_det >= best_single - 1e-12
        for r in (res, greedy_map(L, spec)):
            ratio = math.exp(r.unnorm_log_det - exact.unnorm_log_det)
            assert 0.0 < ratio <= 1.0 + 1e-9


# ---- exact -----------------------------------------------------------------

def test_exact_examples():
    assert exact_map_bruteforce(np.eye(3), unit(3, 3)).chosen == ()
    res = exact_map_bruteforce(np.diag([4.0, 2.0]), unit(2, 2))
    assert res.chosen == (0, 1) and math.exp(res.unnorm_log_det) == pytest.approx(8.0)
    assert exact_map_bruteforce(np.diag([4.0, 2.0]), unit(2, 0)).chosen == ()
    with pytest.raises(ValueError):
        exact_map_bruteforce(np.eye(21), unit(21, 1))


def test_exact_tie_breaks():
    # {0} and {1} tie at det 2; {0,1} has det 3 > 2 but is unaffordable
    res = exact_map_bruteforce(np.array([[2.0, 1.0], [1.0, 2.0]]), unit(2, 1))
    assert res.chosen == (0,)
    # {0,1} and {2} tie at det 4 under costs (1, 1, 2): the smaller set wins
    L = np.diag([2.0, 2.0, 4.0])
    assert exact_map_bruteforce(L, BudgetSpec([1.0, 1.0, 2.0], 2)).chosen == (2,)


@given(st.integers(1, 8), seeds)
def test_exact_matches_plain_enumeration(n, seed):
    rng = np.random.default_rng(seed)
    L = random_psd(rng, n, scale=2.0)
    costs = rng.uniform(0.2, 1.5, size=n)
    B = float(costs.sum() / 2)
    best = max(
        (det_sub(L, Y) for k in range(n + 1) for Y in itertools.combinations(range(n), k) if costs[list(Y)].sum() <= B),
    )
    res = exact_map_bruteforce(L, BudgetSpec(costs, B))
    assert math.exp(res.unnorm_log_det) == pytest.approx(best, rel=1e-9)


# ---- sampled ---------------------------------------------------------------

def test_sampled_examples():
    res = sampled_map(SamplerState(np.diag([9.0]), seed=0), [1.0], 0, 10, 1000)
    assert res.chosen == (0,)
    res = sampled_map(SamplerState(np.eye(3), seed=0), [1.0, 2.0, 3.0], 0, 0, 200)
    assert res.chosen == () and res.status == "converged"
    res = sampled_map(SamplerState(np.zeros((2, 2)), seed=0), [1.0, 1.0], 1, 2, 100)
    assert res.status == "no-feasible-sample"
    with pytest.raises(ValueError):
        sampled_map(SamplerState(np.eye(2)), [1.0, 1.0], 2, 1, 10)


def test_sampled_window_respected(rng):
    L = random_psd(rng, 8, scale=2.0)
    costs = rng.uniform(0.5, 2.0, size=8)
    res = sampled_map(SamplerState(L, seed=4), costs, 2.0, 4.0, 5000)
    assert res.status == "converged"
    assert 2.0 <= res.total_cost <= 4.0


def test_sampled_versus_greedy_paired(rng):
    wins = {"literal": 0, "nonneg": 0}
    for t in range(20):
        L = random_psd(rng, 8, scale=1.5)
        costs = np.ones(8)
        s = sampled_map(SamplerState(L, seed=t), costs, 0, 8, 100_000)
        for mode in wins:
            g = greedy_map(L, BudgetSpec(costs, 8), mode=mode)
            wins[mode] += s.unnorm_log_det >= g.unnorm_log_det - 1e-12
    print("sampled >= greedy in", wins, "of 20 trials")
    assert wins["literal"] >= 10


# ---- MMR -------------------------------------------------------------------

def test_mmr_examples():
    q = np.array([1.0, 0.9, 0.8])
    S = np.eye(3)
    S[0, 1] = S[1, 0] = 0.99
    res = mmr_select(q, S, 0.5, unit(3, 2))
    assert res.order == (0, 2)
    res = mmr_select(q, np.eye(3), 0.0, unit(3, 3))
    assert res.order == (0, 1, 2)
    assert math.isnan(res.unnorm_log_det)
    with pytest.raises(ValueError):
        mmr_select(q, np.eye(3), 1.5, unit(3, 3))


def test_mmr_reports_logdet_when_given_l():
    L = np.diag([4.0, 2.0, 3.0])
    res = mmr_select([0.2, 0.9, 0.5], np.eye(3), 1.0, unit(3, 2), L=L)
    assert res.chosen == (1, 2)
    assert res.unnorm_log_det == pytest.approx(math.log(6.0))


@given(st.integers(1, 10), seeds)
def test_mmr_lambda_one_is_quality_knapsack(n, seed):
    rng = np.random.default_rng(seed)
    q = rng.random(n)
    S = np.corrcoef(rng.normal(size=(n, n + 3))) if n > 1 else np.eye(1)
    costs = rng.uniform(0.5, 2.0, size=n)
    B = float(rng.uniform(0, costs.sum()))
    res = mmr_select(q, S, 1.0, BudgetSpec(costs, B))
    order, spent = [], 0.0
    open_ = set(range(n))
    while True:
        fit = [i for i in open_ if spent + costs[i] <= B]
        if not fit:
            break
        i = max(fit, key=lambda k: (q[k], -k))
        order.append(i)
        open_.discard(i)
        spent += costs[i]
    assert res.order == tuple(order)
