import math

import numpy as np
import pytest

from src.checks import check_prospect, check_reputation
from src.errors import ReputationError
from src.tools.reputation_tool import (
    LossSign,
    ProspectParams,
    ReputationState,
    UpdateParams,
    compute_threshold,
    contribution_reward,
    error_count,
    reputation_score,
    reputation_scores,
    update_reputations,
)


def _state(values):
    state = ReputationState.initial(len(values))
    state.reputation[:] = values
    return state


@pytest.mark.parametrize("values, expected", [((0.0, 0.0), 0.0), ((1.0, -1.0), 0.0), ((0.2, 0.5, -0.1), 0.2)])
def test_threshold_is_mean(values, expected):
    assert compute_threshold(_state(values)) == pytest.approx(expected, abs=1e-15)


def test_prospect_score_examples():
    p = ProspectParams()
    assert reputation_score(0.5, 0.5, p) == 0
    assert reputation_score(1.5, 0.5, p) == 1.0
    assert reputation_score(2.5, 0.5, p) == pytest.approx(1.1096, abs=1e-4)
    assert reputation_score(-0.5, 0.5, p) == -1.0


def test_as_printed_loss_branch_is_positive():
    p = ProspectParams(loss_sign=LossSign.AS_PRINTED, gamma=2.0)
    assert reputation_score(-0.5, 0.5, p) == 2.0


def test_prospect_contract_suite():
    assert check_prospect().passed


def test_prospect_params_validated():
    with pytest.raises(ReputationError):
        ProspectParams(alpha=0.0)
    with pytest.raises(ReputationError):
        UpdateParams(rho=1.0)


def test_scores_vector_matches_scalar():
    state = _state([0.3, -0.2, 0.8])
    p = ProspectParams()
    r_th = compute_threshold(state)
    expected = [reputation_score(r, r_th, p) for r in state.reputation]
    assert reputation_scores(state, p).tolist() == expected


def test_error_count_window():
    state = ReputationState.initial(2)
    for t, sv in enumerate([0.1, 0.2, -0.1, 0.0, 0.3]):
        state.sv_history[0].append((t, sv))
    assert error_count(state, 0) == 2
    assert error_count(state, 1) == 0

    for t, sv in enumerate([0.5, 0.5, -1, -1, 0, -2, 0]):
        state.sv_history[1].append((t, sv))
    assert error_count(state, 1) == 5


def test_single_positive_contributor_reward():
    up = UpdateParams(omega=2.0)
    state = update_reputations(ReputationState.initial(3), [1], {1: 0.03}, [10, 12, 9], up, 1)
    assert state.reputation[1] == pytest.approx(2.0 * (1 - math.exp(-1)), abs=1e-12)


def test_reward_stays_below_omega():
    assert 0 < contribution_reward(1e-9, 1.0, 10.0, 10.0, 1.0) < 1.0
    assert 0 < contribution_reward(50.0, 1.0, 1.0, 10.0, 1.0) <= 1.0


def test_penalties_grow_with_error_count():
    up = UpdateParams()
    bids = [10.0, 10.0]
    state = ReputationState.initial(2)
    drops = []
    for t in range(3):
        new_state = update_reputations(state, [0], {0: -0.05}, bids, up, t)
        drops.append(state.reputation[0] - new_state.reputation[0])
        state = new_state
    assert drops == [1.0, 2.0, 4.0]


def test_unselected_clients_untouched_and_input_not_mutated():
    state = _state([0.1, 0.2, 0.3])
    before = state.reputation.copy()
    new_state = update_reputations(state, [0, 2], {0: 0.2, 2: -0.1}, [10, 10, 10], UpdateParams(), 1)
    assert new_state.reputation[1] == before[1]
    assert np.array_equal(state.reputation, before)
    assert [list(p) for p in new_state.participation] == [[1], [0], [1]]
    assert new_state.sv_history[2] == [(1, -0.1)]


def test_participation_buffer_keeps_five_rounds():
    state = ReputationState.initial(1)
    for t in range(8):
        state = update_reputations(state, [0], {0: 0.1}, [5.0], UpdateParams(), t)
    assert state.selection_counts().tolist() == [5]


def test_empty_round_only_appends_flags():
    state = update_reputations(ReputationState.initial(2), [], {}, [1.0, 1.0], UpdateParams(), 1)
    assert state.reputation.tolist() == [0.0, 0.0]
    assert [list(p) for p in state.participation] == [[0], [0]]


def test_sv_must_match_selection():
    with pytest.raises(ReputationError):
        update_reputations(ReputationState.initial(2), [0], {1: 0.1}, [1.0, 1.0], UpdateParams(), 1)


def test_reputation_contract_suite():
    assert check_reputation(seed=2).passed


def test_reward_strictly_decreases_with_own_bid():
    rewards = [contribution_reward(0.02, 0.05, bid, 30.0, 1.0) for bid in np.linspace(1.0, 29.0, 50)]
    assert all(a > b for a, b in zip(rewards, rewards[1:]))


def test_cheaper_contributor_gains_more():
    sv = {0: 0.04, 1: 0.04, 2: 0.02}
    state = update_reputations(ReputationState.initial(3), [0, 1, 2], sv, [8.0, 12.0, 10.0], UpdateParams(), 1)
    assert state.reputation[0] > state.reputation[1] > 0


def test_rewards_ignore_common_scale_of_positive_contributions():
    rng = np.random.default_rng(6)
    up = UpdateParams()
    for _ in range(50):
        n = int(rng.integers(2, 9))
        selected = sorted(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
        bids = rng.uniform(5, 15, size=n)
        sv = {i: float(rng.normal(0.01, 0.02)) for i in selected}
        c = float(rng.uniform(0.1, 20.0))
        scaled = {i: v * c if v > 0 else v for i, v in sv.items()}
        base = update_reputations(ReputationState.initial(n), selected, sv, bids, up, 1)
        other = update_reputations(ReputationState.initial(n), selected, scaled, bids, up, 1)
        np.testing.assert_allclose(other.reputation, base.reputation, rtol=0, atol=1e-12)
