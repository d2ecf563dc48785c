"""
SBRO-FL Selection Tool - the budgeted 0-1 selection program, its exact
branch-and-bound solver, a brute-force oracle and the baseline selectors
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from loguru import logger

from src.errors import SelectionError

BRUTE_FORCE_LIMIT = 25

# Relative slack on relaxation bounds so rounding never prunes an optimum.
_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class SelectionProblem:
    """
    max sum(weights * x) s.t. sum(bids * x) <= budget, x binary.

    seed only drives the bootstrap fill used when every weight is zero.
    """

    weights: np.ndarray
    bids: np.ndarray
    budget: float
    seed: int = 0

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        bids = np.asarray(self.bids, dtype=np.float64).reshape(-1)
        if weights.shape != bids.shape:
            raise SelectionError(f"{weights.shape[0]} weights but {bids.shape[0]} bids")
        if not (np.all(np.isfinite(weights)) and np.all(weights >= 0)):
            raise SelectionError("weights must be finite and non-negative")
        if not (np.all(np.isfinite(bids)) and np.all(bids > 0)):
            raise SelectionError("bids must be finite and positive")
        if not self.budget > 0:
            raise SelectionError(f"budget must be positive, got {self.budget}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bids", bids)

    @property
    def n(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class SelectionResult:
    """Chosen client ids (ascending), their summed weight and summed bid."""

    selected: tuple[int, ...]
    objective: float
    cost: float


def _result(ids: Iterable[int], weights: np.ndarray | None, bids: np.ndarray) -> SelectionResult:
    chosen = tuple(sorted(int(i) for i in ids))
    objective = math.fsum(weights[i] for i in chosen) if weights is not None else 0.0
    return SelectionResult(chosen, objective, math.fsum(bids[i] for i in chosen))


def _key(result: SelectionResult) -> tuple:
    """Smaller is better: higher objective, then lower cost, then lexicographic ids."""
    return (-result.objective, result.cost, result.selected)


def selection_weights(
    scores: Sequence[float] | np.ndarray,
    history: Sequence[Iterable[int]],
    delta: float,
) -> np.ndarray:
    """
    Objective weights (z_i - z_min) * delta^count_i.

    Args:
        scores: Reputation scores z(R_i) for all clients
        history: Per-client recent selection flags (at most five rounds)
        delta: Diversity decay in (0, 1]

    Returns:
        Non-negative weight vector
    """
    if not 0 < delta <= 1:
        raise SelectionError(f"delta must be in (0, 1], got {delta}")
    z = np.asarray(scores, dtype=np.float64)
    if len(history) != z.shape[0]:
        raise SelectionError(f"{z.shape[0]} scores but {len(history)} histories")
    counts = np.array([sum(flags) for flags in history], dtype=np.int64)
    return (z - z.min()) * np.power(float(delta), counts)


def _greedy_fill(candidates: np.ndarray, bids: np.ndarray, budget: float, seed: int) -> SelectionResult:
    """First-fit over a seeded permutation of candidates."""
    order = candidates[np.random.default_rng(seed).permutation(candidates.shape[0])]
    chosen: list[int] = []
    spent: list[float] = []
    for client in order:
        if math.fsum(spent + [bids[client]]) <= budget:
            chosen.append(int(client))
            spent.append(float(bids[client]))
    return _result(chosen, None, bids)


def baseline_random(bids: Sequence[float] | np.ndarray, budget: float, seed: int) -> SelectionResult:
    """RS-FL: random clients admitted while the budget allows."""
    bids = np.asarray(bids, dtype=np.float64)
    return _greedy_fill(np.arange(bids.shape[0]), bids, budget, seed)


def baseline_hq_random(
    clean_ids: Iterable[int],
    bids: Sequence[float] | np.ndarray,
    budget: float,
    seed: int,
) -> SelectionResult:
    """HQRS-FL: RS-FL restricted to label-clean clients (oracle knowledge)."""
    candidates = np.array(sorted(set(int(i) for i in clean_ids)), dtype=np.int64)
    if candidates.size == 0:
        raise SelectionError("HQRS-FL needs at least one clean client")
    return _greedy_fill(candidates, np.asarray(bids, dtype=np.float64), budget, seed)


def baseline_all(bids: Sequence[float] | np.ndarray) -> SelectionResult:
    """All-FL: every client, budget ignored; cost still reported."""
    bids = np.asarray(bids, dtype=np.float64)
    return _result(range(bids.shape[0]), None, bids)


def _bootstrap(p: SelectionProblem) -> SelectionResult:
    logger.debug("[Selection] All weights are zero, using the seeded budget-greedy bootstrap")
    return _greedy_fill(np.arange(p.n), p.bids, p.budget, p.seed)


class _KnapsackSearch:
    """Depth-first branch and bound over items sorted by weight/bid ratio."""

    def __init__(self, p: SelectionProblem):
        self.weights = p.weights
        self.bids = p.bids
        self.budget = p.budget
        # Zero-weight items never win: dropping one keeps the objective and lowers cost.
        usable = [i for i in range(p.n) if p.weights[i] > 0 and p.bids[i] <= p.budget]
        self.order = sorted(usable, key=lambda i: (-p.weights[i] / p.bids[i], i))
        self.best = _result((), p.weights, p.bids)
        self.nodes = 0

    def bound(self, level: int, value: float, weight: float) -> float:
        """Fractional-knapsack relaxation of the remaining items."""
        room = self.budget - weight
        for item in self.order[level:]:
            bid = self.bids[item]
            if bid <= room:
                room -= bid
                value += self.weights[item]
            else:
                value += self.weights[item] * room / bid
                break
        return value * (1.0 + _BOUND_SLACK) + _BOUND_SLACK

    def fits(self, chosen: list[int], item: int) -> bool:
        return math.fsum([self.bids[i] for i in chosen] + [self.bids[item]]) <= self.budget

    def offer(self, chosen: list[int]) -> None:
        candidate = _result(chosen, self.weights, self.bids)
        if _key(candidate) < _key(self.best):
            self.best = candidate

    def branch(self, level: int, chosen: list[int], value: float, weight: float) -> None:
        self.nodes += 1
        if level == len(self.order):
            return
        if self.bound(level, value, weight) < self.best.objective:
            return
        item = self.order[level]
        if self.fits(chosen, item):
            chosen.append(item)
            self.offer(chosen)
            self.branch(level + 1, chosen, value + self.weights[item], weight + self.bids[item])
            chosen.pop()
        self.branch(level + 1, chosen, value, weight)

    def solve(self) -> SelectionResult:
        self.branch(0, [], 0.0, 0.0)
        return self.best


def solve_selection(p: SelectionProblem) -> SelectionResult:
    """
    Exact optimum of the selection program.

    Among equally good subsets the cheaper one wins, then the lexicographically
    smallest id tuple. When every weight is zero the seeded bootstrap fill is
    returned instead of the (uninformative) empty set.

    Args:
        p: Selection problem

    Returns:
        Optimal SelectionResult
    """
    if p.n == 0:
        return SelectionResult((), 0.0, 0.0)
    if not np.any(p.weights > 0):
        return _bootstrap(p)
    search = _KnapsackSearch(p)
    result = search.solve()
    logger.debug(
        f"[Selection] B&B explored {search.nodes} nodes, picked {len(result.selected)} "
        f"clients (objective={result.objective:.6f}, cost={result.cost:.3f})"
    )
    return result


def _subset_sums(values: np.ndarray) -> np.ndarray:
    """sums[mask] = sum of values[i] over bits i of mask."""
    sums = np.zeros(1, dtype=np.float64)
    for value in values:
        sums = np.concatenate([sums, sums + value])
    return sums


def brute_force_selection(p: SelectionProblem) -> SelectionResult:
    """
    Exhaustive 2^n scan with the same tie-break and bootstrap as solve_selection.

    Args:
        p: Selection problem with n <= 25

    Returns:
        Optimal SelectionResult
    """
    if p.n > BRUTE_FORCE_LIMIT:
        raise SelectionError(f"brute force limited to {BRUTE_FORCE_LIMIT} clients, got {p.n}")
    if p.n == 0:
        return SelectionResult((), 0.0, 0.0)
    if not np.any(p.weights > 0):
        return _bootstrap(p)

    def members(mask: int) -> list[int]:
        return [i for i in range(p.n) if mask >> i & 1]

    costs = _subset_sums(p.bids)
    objectives = _subset_sums(p.weights)
    slack = _BOUND_SLACK * (p.budget + 1.0)

    feasible = costs <= p.budget - slack
    for mask in np.flatnonzero(np.abs(costs - p.budget) <= slack):
        feasible[mask] = math.fsum(p.bids[members(int(mask))]) <= p.budget

    best_value = objectives[feasible].max()
    near_best = np.flatnonzero(feasible & (objectives >= best_value - _BOUND_SLACK * (best_value + 1.0)))
    candidates = [_result(members(int(mask)), p.weights, p.bids) for mask in near_best]
    return min(candidates, key=_key)
