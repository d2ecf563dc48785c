import numpy as np
import pytest

from src.checks import check_mc_consistency, check_shapley_axioms, random_context
from src.errors import ShapleyError
from src.tools.model_tool import ModelParams, aggregate, evaluate
from src.tools.shapley_tool import (
    CoalitionContext,
    TableGame,
    coalition_value,
    exact_shapley,
    mc_shapley,
)


def _two_player_table():
    return TableGame(
        (1, 2),
        {frozenset(): 0.5, frozenset({1}): 0.6, frozenset({2}): 0.55, frozenset({1, 2}): 0.7},
    )


def test_two_player_example():
    result = exact_shapley(_two_player_table())
    np.testing.assert_allclose(result.values, [0.125, 0.075], atol=1e-12)
    assert result.as_dict() == pytest.approx({1: 0.125, 2: 0.075})


def test_single_member_gets_its_marginal_value():
    rng = np.random.default_rng(0)
    ctx = random_context(rng, 1)
    expected = coalition_value(ctx, [10]) - ctx.empty_value
    assert exact_shapley(ctx).values[0] == pytest.approx(expected, abs=1e-15)
    assert mc_shapley(ctx, 3, seed=1).values[0] == pytest.approx(expected, abs=1e-15)


def test_coalition_values():
    rng = np.random.default_rng(1)
    ctx = random_context(rng, 3, duplicate_first=True)
    assert coalition_value(ctx, []) == ctx.empty_value
    assert coalition_value(ctx, [10]) == evaluate(ctx.updates[0], ctx.validation)
    assert coalition_value(ctx, [10, 11]) == coalition_value(ctx, [10])
    averaged = aggregate([(ctx.updates[0], 1.0), (ctx.updates[2], 1.0)])
    assert coalition_value(ctx, [12, 10]) == evaluate(averaged, ctx.validation)
    with pytest.raises(ShapleyError):
        coalition_value(ctx, [99])


def test_exact_enumeration_counts_each_coalition_once():
    rng = np.random.default_rng(2)
    ctx = random_context(rng, 5)
    exact_shapley(ctx)
    assert ctx.evaluations == 32
    exact_shapley(ctx)
    assert ctx.evaluations == 32


def test_threaded_prefill_is_bit_identical():
    rng = np.random.default_rng(3)
    ctx = random_context(rng, 6)
    twin = CoalitionContext(ctx.member_ids, ctx.updates, ctx.validation, ctx.empty_value)
    assert np.array_equal(exact_shapley(ctx).values, exact_shapley(twin, workers=4).values)


def test_axioms_hold_on_random_games():
    assert check_shapley_axioms(seed=5, contexts=40).passed


def test_mc_is_deterministic_per_seed():
    rng = np.random.default_rng(4)
    ctx = random_context(rng, 4)
    assert np.array_equal(mc_shapley(ctx, 200, seed=8).values, mc_shapley(ctx, 200, seed=8).values)


def test_mc_close_to_exact():
    assert check_mc_consistency(seed=1, members=4).passed


def test_guards():
    members = tuple(range(17))
    table = TableGame(members, {})
    with pytest.raises(ShapleyError):
        exact_shapley(table)
    with pytest.raises(ShapleyError):
        mc_shapley(_two_player_table(), 0, seed=0)
    with pytest.raises(ShapleyError):
        CoalitionContext((1, 1), [ModelParams(np.zeros(6), (2, 2))] * 2, None, 0.0)
    with pytest.raises(ShapleyError):
        TableGame((), {})


def test_mc_error_shrinks_as_permutations_double():
    rng = np.random.default_rng(41)
    members = tuple(range(6))
    table = {
        frozenset(i for i in members if mask >> i & 1): float(rng.random())
        for mask in range(1 << len(members))
    }
    game = TableGame(members, table)
    exact = exact_shapley(game).values

    def mean_error(permutations):
        errors = [np.max(np.abs(mc_shapley(game, permutations, seed).values - exact)) for seed in range(40)]
        return float(np.mean(errors))

    errors = [mean_error(k) for k in (100, 200, 400)]
    assert errors[0] >= errors[1] >= errors[2]
