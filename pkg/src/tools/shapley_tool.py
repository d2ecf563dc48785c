"""
SBRO-FL Shapley Tool - exact and Monte Carlo Shapley contributions of the
clients selected in one round
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from src.errors import ShapleyError
from src.tools.model_tool import Dataset, Metric, ModelParams, aggregate, evaluate

EXACT_LIMIT = 16


class CoalitionGame(Protocol):
    """Anything with ordered members and a value per member bitmask."""

    member_ids: tuple[int, ...]

    def value_of(self, mask: int) -> float: ...


def _check_members(member_ids: Sequence[int]) -> tuple[int, ...]:
    members = tuple(int(i) for i in member_ids)
    if not members:
        raise ShapleyError("a coalition game needs at least one member")
    if len(set(members)) != len(members):
        raise ShapleyError(f"duplicate member ids in {members}")
    return members


@dataclass
class CoalitionContext:
    """
    The round's coalition game: v(T) is the validation score of the unweighted
    average of T's uploaded models; v(empty) is a configured convention.

    Coalition values are memoized by member bitmask (bit k = member_ids[k]).
    """

    member_ids: tuple[int, ...]
    updates: Sequence[ModelParams]
    validation: Dataset
    empty_value: float
    metric: Metric = Metric.ACCURACY
    cache: dict[int, float] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.member_ids = _check_members(self.member_ids)
        if len(self.updates) != len(self.member_ids):
            raise ShapleyError(f"{len(self.member_ids)} members but {len(self.updates)} updates")

    @property
    def evaluations(self) -> int:
        """Distinct coalitions evaluated so far (the empty one included)."""
        return len(self.cache)

    def value_of(self, mask: int) -> float:
        if mask not in self.cache:
            self.cache[mask] = self._compute(mask)
        return self.cache[mask]

    def _compute(self, mask: int) -> float:
        if mask == 0:
            return float(self.empty_value)
        members = [self.updates[k] for k in range(len(self.member_ids)) if mask >> k & 1]
        averaged = aggregate([(params, 1.0) for params in members])
        return evaluate(averaged, self.validation, self.metric)

    def prefill(self, workers: int = 1) -> None:
        """Evaluate all 2^m coalitions, optionally on a thread pool."""
        masks = [mask for mask in range(1 << len(self.member_ids)) if mask not in self.cache]
        if workers > 1 and len(masks) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                values = list(pool.map(self._compute, masks))
        else:
            values = [self._compute(mask) for mask in masks]
        self.cache.update(zip(masks, values))


@dataclass
class TableGame:
    """A characteristic-function game given as an explicit table of coalition values."""

    member_ids: tuple[int, ...]
    values: Mapping[frozenset, float]

    def __post_init__(self):
        self.member_ids = _check_members(self.member_ids)

    def value_of(self, mask: int) -> float:
        coalition = frozenset(c for k, c in enumerate(self.member_ids) if mask >> k & 1)
        if coalition not in self.values:
            raise ShapleyError(f"no value given for coalition {sorted(coalition)}")
        return float(self.values[coalition])


@dataclass(frozen=True)
class ShapleyResult:
    """Per-member contributions plus v(S) and v(empty)."""

    member_ids: tuple[int, ...]
    values: np.ndarray
    coalition_value: float
    empty_value: float

    def as_dict(self) -> dict[int, float]:
        return {client: float(sv) for client, sv in zip(self.member_ids, self.values)}


def coalition_value(ctx: CoalitionGame, subset: Iterable[int]) -> float:
    """v(T) for a subset of the members (empty subset gives v(empty))."""
    members = list(subset)
    position = {client: k for k, client in enumerate(ctx.member_ids)}
    unknown = [c for c in members if int(c) not in position]
    if unknown:
        raise ShapleyError(f"clients {unknown} are not members of this coalition")
    mask = 0
    for client in members:
        mask |= 1 << position[int(client)]
    return ctx.value_of(mask)


def exact_shapley(ctx: CoalitionGame, workers: int = 1) -> ShapleyResult:
    """
    Exact Shapley values from one pass over all 2^m coalitions.

    sv_k = sum over T not containing k of |T|!(m-|T|-1)!/m! * [v(T + k) - v(T)],
    accumulated in ascending bitmask order so the result does not depend on
    how the coalition values were computed.

    Args:
        ctx: Round coalition game (m <= 16)
        workers: Threads used to evaluate coalitions

    Returns:
        ShapleyResult aligned with ctx.member_ids
    """
    m = len(ctx.member_ids)
    if m > EXACT_LIMIT:
        raise ShapleyError(f"exact Shapley limited to {EXACT_LIMIT} members, got {m}")
    if isinstance(ctx, CoalitionContext):
        ctx.prefill(workers)

    full = (1 << m) - 1
    values = [ctx.value_of(mask) for mask in range(full + 1)]
    weights = [math.factorial(size) * math.factorial(m - size - 1) / math.factorial(m) for size in range(m)]

    sv = np.zeros(m, dtype=np.float64)
    for k in range(m):
        bit = 1 << k
        sv[k] = math.fsum(
            weights[mask.bit_count()] * (values[mask | bit] - values[mask])
            for mask in range(full + 1)
            if not mask & bit
        )
    return ShapleyResult(ctx.member_ids, sv, values[full], values[0])


def mc_shapley(ctx: CoalitionGame, num_permutations: int, seed: int) -> ShapleyResult:
    """
    Permutation-sampling estimate of the Shapley values.

    Each sampled ordering credits every member with its marginal gain when
    joining the members before it; the estimate is the average over orderings.

    Args:
        ctx: Round coalition game
        num_permutations: Number of sampled orderings (>= 1)
        seed: Sampling seed

    Returns:
        ShapleyResult aligned with ctx.member_ids
    """
    if num_permutations < 1:
        raise ShapleyError("num_permutations must be >= 1")
    m = len(ctx.member_ids)
    rng = np.random.default_rng(seed)
    totals = np.zeros(m, dtype=np.float64)
    for _ in range(num_permutations):
        mask = 0
        previous = ctx.value_of(0)
        for k in rng.permutation(m):
            mask |= 1 << int(k)
            current = ctx.value_of(mask)
            totals[k] += current - previous
            previous = current
    full = (1 << m) - 1
    return ShapleyResult(ctx.member_ids, totals / num_permutations, ctx.value_of(full), ctx.value_of(0))
