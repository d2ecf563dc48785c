"""
Desk-scale ordering replications on the reference federation. These take
minutes; run with `python -m pytest -m slow tests/test_acceptance.py`.
"""
from dataclasses import replace
from pathlib import Path

import pytest

from src.config import Method, load_config
from src.harness import run_comparison
from src.records import render_csv
from src.scenario import build_scenario

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SCENARIO_SEEDS = (0, 1, 2)

pytestmark = pytest.mark.slow


def _final(result, method):
    return result.records[(method, 0)][-1].global_accuracy


def _compare(config_name, scenario_seed):
    base = load_config(CONFIGS / config_name, environ={})
    base = replace(base, scenario=replace(base.scenario, seed=scenario_seed))
    return base, run_comparison(base, list(Method), [0])


def _assert_budget_safe(result, budget):
    for (method, _), records in result.records.items():
        if method != Method.ALL.value:
            assert all(r.total_cost <= budget for r in records)


@pytest.mark.parametrize("scenario_seed", SCENARIO_SEEDS)
def test_reference_ordering(scenario_seed):
    base, result = _compare("reference.env", scenario_seed)
    sbro = _final(result, "sbro")
    assert sbro > _final(result, "rs")
    assert sbro > _final(result, "all")
    assert _final(result, "hqrs") >= sbro - 0.03
    _assert_budget_safe(result, base.budget)


@pytest.mark.parametrize("scenario_seed", SCENARIO_SEEDS)
def test_low_bid_ordering(scenario_seed):
    base, low = _compare("low_bid.env", scenario_seed)
    _, reference = _compare("reference.env", scenario_seed)
    sbro = _final(low, "sbro")
    assert sbro > _final(low, "rs")
    assert sbro > _final(low, "all")
    assert abs(sbro - _final(reference, "sbro")) <= 0.05
    _assert_budget_safe(low, base.budget)


def test_reference_run_is_reproducible():
    base = load_config(CONFIGS / "reference.env", environ={})
    scenario = build_scenario(base)
    first = run_comparison(base, [Method.SBRO], [0], scenario).records[("sbro", 0)]
    second = run_comparison(base, [Method.SBRO], [0], scenario).records[("sbro", 0)]
    assert render_csv(first) == render_csv(second)
