from dataclasses import replace

import pytest

import main as cli
from src.checks import CheckResult, check_mc_consistency, check_solver, run_checks, run_level_checks
from src.records import RoundRecord


def test_budget_violation_is_reported(small_cfg):
    over = [RoundRecord(1, "rs", 0, (0, 1), small_cfg.budget + 1, 0.5)]
    results = {r.name: r for r in run_level_checks(replace(small_cfg, method="rs"), over, over)}
    assert not results["budget_safety"].passed
    assert results["determinism"].passed


def test_all_fl_is_exempt_from_budget(small_cfg):
    rounds = [RoundRecord(1, "all", 0, (0, 1, 2), small_cfg.budget * 3, 0.5)]
    assert all(r.passed for r in run_level_checks(small_cfg, rounds, rounds))


def test_small_kernel_checks_pass():
    assert check_solver(seed=1, problems=50, max_clients=10).passed
    assert check_mc_consistency(seed=2, members=3, permutations=5000).passed


@pytest.mark.slow
def test_full_suite_passes(small_cfg, small_scenario):
    results = run_checks(small_cfg, rounds=3, scenario=small_scenario)
    assert all(isinstance(r, CheckResult) for r in results)
    assert [r.name for r in results if not r.passed] == []


@pytest.mark.slow
def test_check_command_exit_code(tmp_path, small_cfg, monkeypatch):
    monkeypatch.chdir(tmp_path)
    lines = [f"SBRO_{k.upper().replace('.', '__')}={v}" for k, v in small_cfg.to_flat().items()]
    (tmp_path / "small.env").write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert cli.main(["check", "--config", "small.env", "--rounds", "3"]) == 0
