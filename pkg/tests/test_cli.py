import json

import pandas as pd
import pytest

import main as cli
from src.config import ENV_PREFIX


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch, tmp_path):
    """Keep a developer's SBRO_* variables and .env out of the CLI tests."""
    import os
    for key in list(os.environ):
        if key.startswith(ENV_PREFIX):
            monkeypatch.delenv(key)
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def config_file(tmp_path, small_cfg):
    lines = [
        f"{ENV_PREFIX}{key.upper().replace('.', '__')}={value}"
        for key, value in small_cfg.to_flat().items()
    ]
    path = tmp_path / "small.env"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_run_writes_csv_and_sidecar(tmp_path, config_file):
    out = tmp_path / "results" / "sbro.csv"
    code = cli.main(["run", "--config", str(config_file), "--rounds", "2", "--seed", "4", "--out", str(out)])
    assert code == 0
    frame = pd.read_csv(out)
    assert frame["round"].tolist() == [1, 2]
    assert set(frame["seed"]) == {4}
    sidecar = json.loads(out.with_suffix(".json").read_text(encoding="utf-8"))
    assert sidecar["rounds"] == "2" and sidecar["seed"] == "4"


def test_flags_beat_overrides_and_environment(tmp_path, config_file, monkeypatch):
    monkeypatch.setenv("SBRO_ROUNDS", "3")
    simulator = cli.SBROSimulator(str(config_file), overrides=["rounds=2", "budget=30"], method="rs")
    assert simulator.config.rounds == 2
    assert simulator.config.budget == 30.0
    assert simulator.config.method.value == "rs"
    monkeypatch.delenv("SBRO_ROUNDS")
    assert cli.SBROSimulator(str(config_file), rounds=1).config.rounds == 1


def test_same_run_twice_is_byte_identical(tmp_path, config_file):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["run", "--config", str(config_file), "--out", str(first)]) == 0
    assert cli.main(["run", "--config", str(config_file), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_compare_writes_arm_files_and_summary(tmp_path, config_file):
    out_dir = tmp_path / "cmp"
    code = cli.main([
        "compare", "--config", str(config_file), "--rounds", "2",
        "--methods", "sbro,rs", "--seeds", "0,1", "--out", str(out_dir),
    ])
    assert code == 0
    summary = pd.read_csv(out_dir / "summary.csv")
    assert summary["method"].tolist() == ["sbro", "rs"]
    assert (out_dir / "sbro_seed1.csv").exists()


def test_gen_data_writes_fixture(tmp_path, config_file):
    out = tmp_path / "fixture.npz"
    assert cli.main(["gen-data", "--config", str(config_file), "--out", str(out)]) == 0
    assert out.exists()
    run_out = tmp_path / "from_fixture.csv"
    code = cli.main([
        "run", "--config", str(config_file), "--rounds", "1",
        "--override", f"scenario.fixture={out}", "--out", str(run_out),
    ])
    assert code == 0


def test_bad_override_exits_one(config_file):
    assert cli.main(["run", "--config", str(config_file), "--override", "prospect.alhpa=1"]) == 1


def test_missing_config_exits_one():
    assert cli.main(["run", "--config", "nope.env"]) == 1


def test_unreadable_fixture_exits_one(config_file, tmp_path):
    assert cli.main(["run", "--config", str(config_file), "--override", f"scenario.fixture={tmp_path / 'x.npz'}"]) == 1


@pytest.mark.parametrize("argv", [[], ["fly"], ["run", "--method", "greedy"], ["compare", "--seeds", "a,b"]])
def test_usage_errors_exit_two(argv):
    with pytest.raises(SystemExit) as excinfo:
        cli.main(argv)
    assert excinfo.value.code == 2
