"""
SBRO-FL Harness - single runs and multi-arm, multi-seed comparisons
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from loguru import logger

from src.config import ExperimentConfig, Method
from src.errors import ConfigError
from src.records import RoundRecord, emit_csv, write_sidecar
from src.round_agent import RoundAgent
from src.scenario import Scenario, build_scenario


def run_experiment(cfg: ExperimentConfig, scenario: Scenario | None = None) -> list[RoundRecord]:
    """
    Run one arm for cfg.rounds rounds.

    Args:
        cfg: Experiment configuration (method and algorithmic seed included)
        scenario: Prebuilt federation; built from cfg when omitted

    Returns:
        One RoundRecord per round
    """
    scenario = scenario if scenario is not None else build_scenario(cfg)
    return RoundAgent(cfg, scenario).run()


@dataclass(frozen=True)
class ComparisonResult:
    """Records per (method, seed) arm plus the per-method summary table."""

    records: dict[tuple[str, int], list[RoundRecord]]
    summary: pd.DataFrame


def _arm_frame(records: dict[tuple[str, int], list[RoundRecord]], last_k: int) -> pd.DataFrame:
    rows = []
    for (method, seed), arm in records.items():
        tail = np.array([r.global_accuracy for r in arm[-last_k:]])
        rows.append({
            "method": method,
            "seed": seed,
            "final_accuracy": arm[-1].global_accuracy,
            "last_k_variance": float(tail.var()),
            "mean_cost": float(np.mean([r.total_cost for r in arm])),
            "mean_clean_selected": float(np.mean([r.num_clean_selected for r in arm])),
        })
    return pd.DataFrame(rows)


def summarize(records: dict[tuple[str, int], list[RoundRecord]], last_k: int = 20) -> pd.DataFrame:
    """
    Per-method summary: final-round accuracy mean and variance over seeds,
    and the seed-averaged variance of the last `last_k` rounds' accuracy.

    Variances are population variances, so a single seed reports 0.
    """
    arms = _arm_frame(records, last_k)
    summary = arms.groupby("method", sort=False).agg(
        seeds=("seed", "count"),
        final_accuracy_mean=("final_accuracy", "mean"),
        final_accuracy_var=("final_accuracy", lambda s: float(np.var(s.to_numpy()))),
        last_k_variance_mean=("last_k_variance", "mean"),
        mean_cost=("mean_cost", "mean"),
        mean_clean_selected=("mean_clean_selected", "mean"),
    )
    return summary.reset_index()


def run_comparison(
    base_cfg: ExperimentConfig,
    methods: Sequence[Method | str],
    seeds: Sequence[int],
    scenario: Scenario | None = None,
) -> ComparisonResult:
    """
    Run every (method, seed) arm on one shared scenario.

    Arms only differ in method and algorithmic seed; data, flips and bids
    come from base_cfg.scenario. With base_cfg.workers > 1 the arms run on a
    thread pool; results are collected in (method, seed) order either way.

    Args:
        base_cfg: Configuration every arm starts from
        methods: Arms to run
        seeds: Algorithmic seeds

    Returns:
        ComparisonResult with per-arm records and the summary table
    """
    if not methods or not seeds:
        raise ConfigError("run_comparison needs at least one method and one seed")
    scenario = scenario if scenario is not None else build_scenario(base_cfg)
    arms = [replace(base_cfg, method=Method(m), seed=int(s)) for m in methods for s in seeds]
    logger.info(f"[Harness] Comparing {len(arms)} arms ({', '.join(Method(m).value for m in methods)})")

    def run_arm(cfg: ExperimentConfig) -> list[RoundRecord]:
        return run_experiment(cfg, scenario)

    if base_cfg.workers > 1 and len(arms) > 1:
        # Arm-level parallelism only; rounds inside an arm stay on one thread.
        arm_cfgs = [replace(cfg, workers=1) for cfg in arms]
        with ThreadPoolExecutor(max_workers=base_cfg.workers) as pool:
            results = list(pool.map(run_arm, arm_cfgs))
    else:
        results = [run_arm(cfg) for cfg in arms]

    records = {(cfg.method.value, cfg.seed): arm for cfg, arm in zip(arms, results)}
    summary = summarize(records, base_cfg.last_k)
    logger.info("✓ [Harness] Comparison complete")
    return ComparisonResult(records, summary)


def arm_path(out_dir: str | Path, method: str, seed: int) -> Path:
    return Path(out_dir) / f"{method}_seed{seed}.csv"


def write_comparison(result: ComparisonResult, base_cfg: ExperimentConfig, out_dir: str | Path) -> Path:
    """Write one CSV (plus config sidecar) per arm and summary.csv into out_dir."""
    out_dir = Path(out_dir)
    for (method, seed), arm in result.records.items():
        path = emit_csv(arm, arm_path(out_dir, method, seed))
        write_sidecar(replace(base_cfg, method=Method(method), seed=seed).to_flat(), path)
    summary_path = out_dir / "summary.csv"
    result.summary.to_csv(summary_path, index=False, float_format="%.6f", lineterminator="\n")
    logger.info(f"✓ [Harness] Wrote {len(result.records)} arm files and {summary_path}")
    return summary_path
