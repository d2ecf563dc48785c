import numpy as np
import pytest

from src.checks import check_solver
from src.errors import SelectionError
from src.tools.selection_tool import (
    SelectionProblem,
    baseline_all,
    baseline_hq_random,
    baseline_random,
    brute_force_selection,
    selection_weights,
    solve_selection,
)


def test_round_one_weights_are_zero():
    weights = selection_weights(np.zeros(4), [[] for _ in range(4)], 0.5)
    assert weights.tolist() == [0.0] * 4


def test_diversity_decay():
    weights = selection_weights(np.array([0.0, 1.0]), [[1, 1, 1], [1, 1, 1, 1, 1]], 0.5)
    assert weights.tolist() == [0.0, 0.03125]


def test_delta_validated():
    with pytest.raises(SelectionError):
        selection_weights(np.zeros(2), [[], []], 0.0)


def test_small_knapsack_example():
    result = solve_selection(SelectionProblem([0.5, 0.3, 0.2], [10, 10, 10], 20))
    assert result.selected == (0, 1)
    assert result.objective == pytest.approx(0.8)
    assert result.cost == 20.0


def test_generous_budget_takes_all_positive_weights():
    result = solve_selection(SelectionProblem([0.5, 0.0, 0.2], [10, 10, 10], 100))
    assert result.selected == (0, 2)


def test_budget_below_min_bid_selects_nobody():
    result = solve_selection(SelectionProblem([0.5, 0.3], [10, 10], 5))
    assert result.selected == () and result.objective == 0.0


def test_tie_prefers_cheaper_then_lexicographic():
    cheaper = solve_selection(SelectionProblem([0.4, 0.4], [10, 9], 10))
    assert cheaper.selected == (1,)
    lexicographic = solve_selection(SelectionProblem([0.4, 0.4], [10, 10], 10))
    assert lexicographic.selected == (0,)


def test_all_zero_weights_use_seeded_bootstrap():
    p = SelectionProblem(np.zeros(8), np.full(8, 10.0), 45, seed=3)
    first, again = solve_selection(p), solve_selection(p)
    assert first == again
    assert len(first.selected) == 4
    assert first.cost <= 45
    assert brute_force_selection(p) == first


def test_problem_validation():
    with pytest.raises(SelectionError):
        SelectionProblem([0.1], [0.0], 10)
    with pytest.raises(SelectionError):
        SelectionProblem([-0.1], [1.0], 10)
    with pytest.raises(SelectionError):
        SelectionProblem([0.1], [1.0], 0)


def test_brute_force_empty_and_limit():
    assert brute_force_selection(SelectionProblem([], [], 10)).selected == ()
    with pytest.raises(SelectionError):
        brute_force_selection(SelectionProblem(np.ones(26), np.ones(26), 10))


def test_solver_agrees_with_brute_force():
    assert check_solver(seed=0, problems=200, max_clients=15).passed


def test_exact_budget_boundary_is_feasible():
    result = solve_selection(SelectionProblem([1, 1, 1], [0.1, 0.2, 0.7], 1.0))
    assert result.selected == (0, 1, 2)


def test_baseline_random_budget_edges_and_determinism():
    bids = np.array([10.0, 9.0, 11.0, 10.5])
    assert baseline_random(bids, 0.0, 1).selected == ()
    assert baseline_random(bids, bids.sum(), 1).selected == (0, 1, 2, 3)
    assert baseline_random(bids, 25, 4) == baseline_random(bids, 25, 4)
    assert baseline_random(bids, 25, 4).cost <= 25


def test_hq_random_restricted_to_clean():
    bids = np.full(10, 10.0)
    result = baseline_hq_random([2, 5, 7, 9, 1], bids, 45, seed=0)
    assert len(result.selected) == 4
    assert set(result.selected) <= {1, 2, 5, 7, 9}
    with pytest.raises(SelectionError):
        baseline_hq_random([], bids, 45, seed=0)


def test_hq_random_with_all_clean_matches_random():
    bids = np.array([3.0, 8.0, 5.0, 7.0, 2.0])
    assert baseline_hq_random(range(5), bids, 12, 9) == baseline_random(bids, 12, 9)


def test_baseline_all():
    bids = np.array([10.0, 9.5, 12.0])
    result = baseline_all(bids)
    assert result.selected == (0, 1, 2)
    assert result.cost == pytest.approx(31.5)
    assert baseline_all(np.ones(40)).selected == tuple(range(40))


def _positive_problem(rng, n, budget_share=0.5):
    weights = rng.random(n) + 0.01
    bids = rng.uniform(1.0, 15.0, size=n)
    return weights, bids, float(budget_share * bids.sum())


def test_larger_budget_never_lowers_the_optimum():
    rng = np.random.default_rng(21)
    for _ in range(100):
        weights, bids, _ = _positive_problem(rng, int(rng.integers(1, 16)))
        budgets = np.sort(rng.uniform(0.5, bids.sum() + 1.0, size=4))
        objectives = [solve_selection(SelectionProblem(weights, bids, b)).objective for b in budgets]
        assert all(a <= b for a, b in zip(objectives, objectives[1:]))


@pytest.mark.parametrize("scale", [0.25, 2.0, 8.0, 3.0, 0.1])
def test_scaling_weights_keeps_the_selection(scale):
    rng = np.random.default_rng(22)
    for _ in range(60):
        weights, bids, budget = _positive_problem(rng, int(rng.integers(1, 16)))
        base = solve_selection(SelectionProblem(weights, bids, budget))
        scaled = solve_selection(SelectionProblem(weights * scale, bids, budget))
        assert scaled.selected == base.selected


def test_more_recent_selections_never_raise_priority():
    rng = np.random.default_rng(23)
    for _ in range(60):
        n = int(rng.integers(2, 12))
        scores = rng.normal(size=n)
        history = [rng.integers(0, 2, size=5).tolist() for _ in range(n)]
        i = int(rng.integers(n))
        bids = rng.uniform(1.0, 15.0, size=n)
        budget = float(0.5 * bids.sum())
        previous = None
        for count in range(6):
            history[i] = [1] * count + [0] * (5 - count)
            weights = selection_weights(scores, history, 0.5)
            if previous is not None:
                assert weights[i] <= previous[0]
                np.testing.assert_array_equal(np.delete(weights, i), np.delete(previous[1], i))
                if weights.sum() > 0 and i not in previous[2]:
                    assert i not in solve_selection(SelectionProblem(weights, bids, budget)).selected
            chosen = solve_selection(SelectionProblem(weights, bids, budget)).selected if weights.sum() > 0 else ()
            previous = (weights[i], weights, chosen)
