"""
SBRO-FL Reputation Tool - reputation values, prospect-theory scores and the
Shapley-and-bid driven update with exponential penalties
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from src.errors import ReputationError

HISTORY_WINDOW = 5


class LossSign(str, Enum):
    NEGATIVE = "negative"
    AS_PRINTED = "as_printed"


@dataclass(frozen=True)
class ProspectParams:
    """Value-function shape: gain exponent alpha, loss exponent beta, loss weight gamma."""

    alpha: float = 0.15
    beta: float = 0.3
    gamma: float = 1.0
    loss_sign: LossSign = LossSign.NEGATIVE

    def __post_init__(self):
        object.__setattr__(self, "loss_sign", LossSign(self.loss_sign))
        if not (0 < self.alpha <= 1 and 0 < self.beta <= 1):
            raise ReputationError(f"alpha and beta must be in (0, 1], got {self.alpha}, {self.beta}")
        if not self.gamma > 0:
            raise ReputationError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class UpdateParams:
    """Reward coefficient omega, punishment coefficient psi, penalty base rho."""

    omega: float = 1.0
    psi: float = 1.0
    rho: float = 2.0
    err_window: int = HISTORY_WINDOW

    def __post_init__(self):
        if not (self.omega > 0 and self.psi > 0):
            raise ReputationError("omega and psi must be positive")
        if not self.rho > 1:
            raise ReputationError(f"rho must exceed 1, got {self.rho}")
        if self.err_window < 1:
            raise ReputationError("err_window must be >= 1")


@dataclass
class ReputationState:
    """
    Per-client reputation R_i, Shapley history SV_his and the last-five-round
    participation flags H^t.
    """

    reputation: np.ndarray
    sv_history: list[list[tuple[int, float]]]
    participation: list[deque]

    @classmethod
    def initial(cls, n: int, window: int = HISTORY_WINDOW) -> "ReputationState":
        if n < 1:
            raise ReputationError("reputation state needs at least one client")
        return cls(
            reputation=np.zeros(n, dtype=np.float64),
            sv_history=[[] for _ in range(n)],
            participation=[deque(maxlen=window) for _ in range(n)],
        )

    @property
    def n(self) -> int:
        return int(self.reputation.shape[0])

    def copy(self) -> "ReputationState":
        return ReputationState(
            reputation=self.reputation.copy(),
            sv_history=[list(h) for h in self.sv_history],
            participation=[deque(p, maxlen=p.maxlen) for p in self.participation],
        )

    def selection_counts(self) -> np.ndarray:
        """count_i: times selected in the buffered recent rounds."""
        return np.array([sum(flags) for flags in self.participation], dtype=np.int64)


def compute_threshold(state: ReputationState) -> float:
    """R_th: mean reputation across all n clients."""
    return math.fsum(state.reputation) / state.n


def reputation_score(r_i: float, r_th: float, p: ProspectParams) -> float:
    """
    Prospect-theory value of R_i relative to the reference point R_th.

    Gains saturate as (R_i - R_th)^alpha; losses weigh gamma * (R_th - R_i)^beta,
    negative by default, positive with LossSign.AS_PRINTED.
    """
    if r_i > r_th:
        return (r_i - r_th) ** p.alpha
    loss = p.gamma * (r_th - r_i) ** p.beta
    return loss if p.loss_sign is LossSign.AS_PRINTED else -loss


def reputation_scores(state: ReputationState, p: ProspectParams) -> np.ndarray:
    """z(R_i) for every client against the current threshold."""
    r_th = compute_threshold(state)
    return np.array([reputation_score(float(r), r_th, p) for r in state.reputation])


def error_count(state: ReputationState, client_id: int, window: int = HISTORY_WINDOW) -> int:
    """err_i: rounds with sv <= 0 among the client's last `window` selected rounds."""
    recent = state.sv_history[client_id][-window:]
    return sum(1 for _, sv in recent if sv <= 0)


def contribution_reward(sv: float, s_pos: float, bid: float, b_pos: float, omega: float) -> float:
    """omega * (1 - exp(-(sv/S_pos) / (B_i/B_pos))), strictly inside (0, omega)."""
    effectiveness = (sv / s_pos) / (bid / b_pos)
    return -omega * math.expm1(-effectiveness)


def update_reputations(
    state: ReputationState,
    selected: Iterable[int],
    sv: Mapping[int, float],
    bids: Sequence[float] | np.ndarray,
    up: UpdateParams,
    round_index: int,
) -> ReputationState:
    """
    Apply one round's reputation update.

    Selected clients with sv <= 0 lose psi * rho^err_i (err_i taken before this
    round's value is recorded); positive contributors gain the bid-adjusted
    saturating reward; everyone else is untouched. This round's sv values and
    selection flags are then appended to the histories.

    Args:
        state: Current state (not modified)
        selected: Ids of S^t
        sv: Shapley value per selected client
        bids: Bid vector for all clients
        up: Update coefficients
        round_index: Round number stored alongside each sv entry

    Returns:
        The updated state
    """
    chosen = sorted(set(int(i) for i in selected))
    if set(sv) != set(chosen):
        extra = sorted(set(sv) - set(chosen))
        missing = sorted(set(chosen) - set(sv))
        raise ReputationError(
            f"sv must cover exactly the selected set (unselected: {extra}, missing: {missing})"
        )
    bids = np.asarray(bids, dtype=np.float64)
    if bids.shape[0] != state.n:
        raise ReputationError(f"expected {state.n} bids, got {bids.shape[0]}")
    if any(bids[i] <= 0 for i in chosen):
        raise ReputationError("selected clients must have positive bids")

    positive = [i for i in chosen if sv[i] > 0]
    s_pos = math.fsum(sv[i] for i in positive)
    b_pos = math.fsum(bids[i] for i in positive)

    new_state = state.copy()
    for i in chosen:
        if sv[i] > 0:
            new_state.reputation[i] += contribution_reward(sv[i], s_pos, bids[i], b_pos, up.omega)
        else:
            new_state.reputation[i] -= up.psi * up.rho ** error_count(state, i, up.err_window)

    picked = set(chosen)
    for i in range(state.n):
        if i in picked:
            new_state.sv_history[i].append((round_index, float(sv[i])))
        new_state.participation[i].append(1 if i in picked else 0)
    return new_state
