"""
SBRO-FL - Shapley-Bid Reputation Optimized client selection for federated learning
Main entry point: run, compare, gen-data and check commands
"""
import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from dotenv import load_dotenv
from loguru import logger

from src.checks import CheckResult, run_checks
from src.config import ExperimentConfig, Method, load_config
from src.errors import ConfigError, SimulatorError
from src.harness import ComparisonResult, run_comparison, run_experiment, write_comparison
from src.log import configure_logging
from src.records import RoundRecord, emit_csv, write_sidecar
from src.scenario import build_scenario, save_fixture


class SBROSimulator:
    """Main SBRO-FL controller - resolves configuration and drives the harness."""

    def __init__(
        self,
        config_path: Optional[str] = None,
        overrides: Sequence[str] = (),
        seed: Optional[int] = None,
        method: Optional[str] = None,
        rounds: Optional[int] = None,
        out: Optional[str] = None,
    ):
        """
        Resolve the experiment configuration.

        Args:
            config_path: Optional dotenv config document
            overrides: 'key=value' overrides applied after the file and environment
            seed: Algorithmic seed (flag, highest precedence)
            method: sbro, rs, hqrs or all
            rounds: Number of communication rounds
            out: Output path (CSV for run/gen-data, directory for compare)
        """
        # Load a local .env before reading SBRO_* variables
        load_dotenv()

        config = load_config(config_path, overrides)
        flags = {}
        if seed is not None:
            flags["seed"] = seed
        if method is not None:
            flags["method"] = Method(method)
        if rounds is not None:
            flags["rounds"] = rounds
        if out is not None:
            flags["output_path"] = out
        self.config: ExperimentConfig = replace(config, **flags) if flags else config

    def run(self) -> list[RoundRecord]:
        """Run one arm and write its CSV plus config sidecar."""
        records = run_experiment(self.config)
        path = emit_csv(records, self.config.output_path)
        write_sidecar(self.config.to_flat(), path)
        logger.info(f"✓ [CLI] {len(records)} rounds written to {path}")
        return records

    def compare(self, methods: Sequence[str], seeds: Sequence[int]) -> ComparisonResult:
        """Run every (method, seed) arm and write per-arm CSVs and summary.csv."""
        result = run_comparison(self.config, [Method(m) for m in methods], seeds)
        out_dir = Path(self.config.output_path)
        if out_dir.suffix:
            out_dir = out_dir.with_suffix("")
        write_comparison(result, self.config, out_dir)
        return result

    def gen_data(self) -> Path:
        """Write the configured scenario as an .npz fixture."""
        path = Path(self.config.output_path)
        if path.suffix != ".npz":
            path = path.with_suffix(".npz")
        return save_fixture(build_scenario(self.config), path)

    def check(self) -> list[CheckResult]:
        """Run the invariant suite."""
        return run_checks(self.config)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from exc


def _method_list(text: str) -> list[str]:
    methods = [m.strip().lower() for m in text.split(",") if m.strip()]
    valid = {m.value for m in Method}
    unknown = [m for m in methods if m not in valid]
    if unknown or not methods:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {sorted(valid)}, got '{text}'")
    return methods


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="dotenv config document (SBRO_* keys)")
    common.add_argument("--seed", type=int, help="algorithmic seed")
    common.add_argument("--method", choices=[m.value for m in Method])
    common.add_argument("--rounds", type=int)
    common.add_argument("--out", help="output path")
    common.add_argument(
        "--override", action="append", default=[], metavar="KEY=VALUE",
        help="config override, e.g. prospect.alpha=0.2 or SBRO_BUDGET=60 (repeatable)",
    )
    common.add_argument(
        "--log-level", default=os.environ.get("SBRO_LOG_LEVEL", "INFO"),
        help="DEBUG, INFO, WARNING, ... (default: $SBRO_LOG_LEVEL or INFO)",
    )

    parser = argparse.ArgumentParser(
        prog="sbro-fl",
        description="Budgeted, reputation-driven client selection for federated learning.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("run", parents=[common], help="run a single arm")
    compare = commands.add_parser("compare", parents=[common], help="run several methods and seeds")
    compare.add_argument("--methods", type=_method_list, default=["sbro", "rs", "hqrs", "all"])
    compare.add_argument("--seeds", type=_int_list, default=[0])
    commands.add_parser("gen-data", parents=[common], help="write a scenario fixture (.npz)")
    commands.add_parser("check", parents=[common], help="run the invariant suite")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main execution function."""
    # argparse exits with code 2 on usage errors
    args = build_parser().parse_args(argv)

    try:
        configure_logging(args.log_level)
    except ValueError as e:
        print(f"✗ Error: invalid log level '{args.log_level}' ({e})", file=sys.stderr)
        return 2

    try:
        simulator = SBROSimulator(
            config_path=args.config,
            overrides=args.override,
            seed=args.seed,
            method=args.method,
            rounds=args.rounds,
            out=args.out,
        )
        if args.command == "run":
            simulator.run()
        elif args.command == "compare":
            result = simulator.compare(args.methods, args.seeds)
            print(result.summary.to_string(index=False, float_format=lambda x: f"{x:.4f}"))
        elif args.command == "gen-data":
            simulator.gen_data()
        elif args.command == "check":
            failed = [r.name for r in simulator.check() if not r.passed]
            if failed:
                logger.error(f"✗ [CLI] {len(failed)} checks failed: {', '.join(failed)}")
                return 1
            logger.info("✓ [CLI] All checks passed")
    except ConfigError as e:
        logger.error(f"✗ [CLI] Configuration error: {e}")
        return 1
    except (SimulatorError, OSError) as e:
        logger.error(f"✗ [CLI] {e}")
        return 1

    return 0


if __name__ == "__main__":
    exit(main())
