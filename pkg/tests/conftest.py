"""Shared fixtures: a small federation that runs a few rounds in well under a second."""
from dataclasses import replace

import numpy as np
import pytest

from src.config import ExperimentConfig, ScenarioConfig
from src.scenario import build_scenario
from src.tools.model_tool import Dataset


@pytest.fixture
def small_cfg(tmp_path) -> ExperimentConfig:
    scenario = ScenarioConfig(
        num_classes=3,
        input_dim=4,
        class_separation=4.0,
        num_clients=6,
        samples_total=600,
        flip_groups=((2, 0.9), (2, 0.6), (2, 0.0)),
        validation_size=150,
        test_size=150,
        seed=7,
    )
    return ExperimentConfig(
        scenario=scenario,
        rounds=4,
        budget=25.0,
        seed=3,
        output_path=str(tmp_path / "run.csv"),
    )


@pytest.fixture
def small_scenario(small_cfg):
    return build_scenario(small_cfg)


@pytest.fixture
def tiny_data() -> Dataset:
    rng = np.random.default_rng(0)
    return Dataset(rng.standard_normal((30, 3)), rng.integers(0, 3, size=30), 3)


@pytest.fixture
def cfg_factory(small_cfg):
    """Copy of small_cfg with top-level fields replaced."""
    def make(**changes) -> ExperimentConfig:
        return replace(small_cfg, **changes)
    return make
