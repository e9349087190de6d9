"""Budget-constrained MAP approximations and the MMR baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, islice
from typing import Sequence

import numpy as np

from .core import as_kernel
from .linalg import PIVOT_TOL, SchurFactor, logdet_psd
from .sampler import SamplerState

__all__ = [
    "BudgetSpec",
    "SelectionResult",
    "greedy_map",
    "greedy_gains",
    "exact_map_bruteforce",
    "sampled_map",
    "mmr_select",
]

BRUTEFORCE_MAX_N = 20
MODES = ("literal", "nonneg")


@dataclass(frozen=True)
class BudgetSpec:
    costs: np.ndarray
    budget: float

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=float).reshape(-1)
        if not np.all(np.isfinite(costs)) or np.any(costs < 0):
            raise ValueError("costs must be finite and nonnegative")
        if not self.budget >= 0:
            raise ValueError(f"budget must be nonnegative, got {self.budget}")
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "budget", float(self.budget))

    def cost_of(self, Y) -> float:
        return math.fsum(self.costs[list(Y)]) if len(Y) else 0.0


@dataclass(frozen=True)
class SelectionResult:
    chosen: tuple[int, ...]
    order: tuple[int, ...]
    total_cost: float
    unnorm_log_det: float
    status: str

    def log_prob(self, log_z: float) -> float:
        return self.unnorm_log_det - log_z


def _check_costs(L, budget: BudgetSpec):
    if budget.costs.shape[0] != L.n:
        raise ValueError(f"{budget.costs.shape[0]} costs for {L.n} items")


def greedy_gains(L, Y: Sequence[int]) -> np.ndarray:
    """Unnormalized gains ``det(L_{Y+i}) - det(L_Y)`` for every item, via Schur complements.

    Entries for items already in ``Y`` are zero.
    """
    L = as_kernel(L)
    factor = SchurFactor(L.matrix)
    for j in Y:
        factor.add(j)
    gains = math.exp(factor.logdet) * (factor.schur() - 1.0)
    gains[list(Y)] = 0.0
    return gains


def greedy_map(L, budget: BudgetSpec, mode: str = "literal") -> SelectionResult:
    """Greedy cost-scaled ascent on ``det(L_Y)`` under a knapsack budget.

    Each round adds the affordable item maximizing
    ``(P(Y + i) - P(Y)) / cost(i)``.  Because ``det(L_Y) > 0`` is a common
    factor the comparison is done on ``(s_i - 1) / cost(i)`` with ``s_i`` the
    Schur complement of ``i``.  ``mode="literal"`` keeps adding while any item
    is affordable; ``mode="nonneg"`` also stops once the best gain is not
    positive.  Ties go to the lowest index.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    L = as_kernel(L)
    _check_costs(L, budget)
    costs = budget.costs
    n = L.n
    factor = SchurFactor(L.matrix)
    diag = np.diag(L.matrix)
    singular = False
    order: list[int] = []
    spent = 0.0
    open_ = np.ones(n, dtype=bool)
    status = "converged"
    while True:
        open_ &= spent + costs <= budget.budget
        cand = np.flatnonzero(open_)
        if cand.size == 0:
            if len(order) < n:
                status = "budget-exhausted"
            break
        c = costs[cand]
        if singular:
            # det(L_Y) = 0 already: every gain is exactly zero
            delta = np.zeros(cand.size)
        else:
            delta = factor.schur()[cand] - 1.0
        free = c == 0.0
        if np.any(free & (delta > 0.0)):
            i = int(cand[np.flatnonzero(free & (delta > 0.0))[0]])
            raise ValueError(f"item {i} has zero cost and positive gain; gain ratio undefined")
        ratio = np.empty(cand.size)
        ratio[~free] = delta[~free] / c[~free]
        ratio[free] = np.where(delta[free] < 0.0, -math.inf, 0.0)
        best = int(np.argmax(ratio))
        if mode == "nonneg" and delta[best] <= 0.0:
            status = "gain-stopped"
            break
        j = int(cand[best])
        if not singular:
            s = delta[best] + 1.0
            if s <= PIVOT_TOL * max(diag[j], 1.0):
                singular = True
            else:
                factor.add(j)
        order.append(j)
        open_[j] = False
        spent += costs[j]
    chosen = tuple(sorted(order))
    logdet = -math.inf if singular else factor.logdet
    return SelectionResult(chosen, tuple(order), budget.cost_of(chosen), logdet, status)


def _batched_logdet(M, combos):
    idx = np.asarray(combos)
    blocks = M[idx[:, :, None], idx[:, None, :]]
    sign, ld = np.linalg.slogdet(blocks)
    return np.where(sign > 0, ld, -math.inf)


def exact_map_bruteforce(L, budget: BudgetSpec, max_n: int = BRUTEFORCE_MAX_N, tie_tol: float = 1e-12) -> SelectionResult:
    """Exhaustive search for the max-determinant affordable subset (testing oracle).

    Ties are broken toward smaller cardinality, then lexicographically smaller
    index tuples.
    """
    L = as_kernel(L)
    _check_costs(L, budget)
    n = L.n
    if n > max_n:
        raise ValueError(f"brute force limited to n <= {max_n}, got n={n}")
    M = L.matrix
    costs = budget.costs
    best: tuple[int, ...] = ()
    best_ld = 0.0
    for k in range(1, n + 1):
        it = combinations(range(n), k)
        while True:
            block = list(islice(it, 8192))
            if not block:
                break
            arr = np.asarray(block)
            feasible = costs[arr].sum(axis=1) <= budget.budget
            if not np.any(feasible):
                continue
            arr = arr[feasible]
            ld = _batched_logdet(M, arr)
            top = float(np.max(ld))
            if top > best_ld + tie_tol * max(1.0, abs(best_ld)):
                first = int(np.flatnonzero(ld >= top - tie_tol * max(1.0, abs(top)))[0])
                best = tuple(int(i) for i in arr[first])
                best_ld = float(ld[first])
    return SelectionResult(best, best, budget.cost_of(best), best_ld, "converged")


def sampled_map(sampler: SamplerState, costs, lo: float, hi: float, count: int) -> SelectionResult:
    """Best-probability sample among ``count`` draws whose cost lies in ``[lo, hi]``.

    When no draw lands in the window the result is empty with status
    ``"no-feasible-sample"``; the caller may widen the window.
    """
    if lo > hi:
        raise ValueError(f"empty cost window [{lo}, {hi}]")
    costs = np.asarray(costs, dtype=float)
    M = sampler.kernel.matrix
    seen: dict[tuple[int, ...], float] = {}
    for Y in sampler.sample_many(count):
        if Y in seen:
            continue
        c = math.fsum(costs[list(Y)]) if Y else 0.0
        if lo <= c <= hi:
            seen[Y] = logdet_psd(M[np.ix_(Y, Y)])
    if not seen:
        return SelectionResult((), (), 0.0, 0.0, "no-feasible-sample")
    best = max(seen, key=lambda Y: (seen[Y], -len(Y), tuple(-i for i in Y)))
    return SelectionResult(best, best, math.fsum(costs[list(best)]) if best else 0.0, seen[best], "converged")


def mmr_select(q, S, lam: float, budget: BudgetSpec, L=None) -> SelectionResult:
    """Maximum marginal relevance packing.

    Repeatedly adds the affordable item maximizing
    ``lam * q_i - (1 - lam) * max_{j in Y} S_ij`` (the max over an empty
    selection is 0) until nothing affordable remains.  ``L``, if given, is
    only used to report ``log det(L_Y)`` of the result; otherwise that field
    is NaN.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    q = np.asarray(q, dtype=float).reshape(-1)
    S = as_kernel(S).matrix
    n = q.shape[0]
    if S.shape[0] != n or budget.costs.shape[0] != n:
        raise ValueError("q, S and costs disagree on the number of items")
    costs = budget.costs
    max_sim = np.full(n, -math.inf)
    open_ = np.ones(n, dtype=bool)
    order: list[int] = []
    spent = 0.0
    while True:
        open_ &= spent + costs <= budget.budget
        cand = np.flatnonzero(open_)
        if cand.size == 0:
            break
        penalty = max_sim[cand] if order else np.zeros(cand.size)
        score = lam * q[cand] - (1.0 - lam) * penalty
        j = int(cand[int(np.argmax(score))])
        order.append(j)
        open_[j] = False
        spent += costs[j]
        max_sim = np.maximum(max_sim, S[j])
    chosen = tuple(sorted(order))
    ld = math.nan
    if L is not None:
        ld = logdet_psd(as_kernel(L).submatrix(chosen))
    status = "converged" if len(order) == n else "budget-exhausted"
    return SelectionResult(chosen, tuple(order), budget.cost_of(chosen), ld, status)
