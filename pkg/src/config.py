"""
SBRO-FL Config - experiment configuration from dotenv documents,
environment variables and command-line overrides
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from dotenv import dotenv_values

from src.errors import ConfigError, SimulatorError
from src.tools.model_tool import Metric, TrainConfig
from src.tools.partition_tool import BidMode, BidSpec, PartitionSpec
from src.tools.reputation_tool import ProspectParams, UpdateParams

ENV_PREFIX = "SBRO_"
# Read by the CLI before configuration is resolved.
RESERVED_KEYS = frozenset({"SBRO_LOG_LEVEL"})

REFERENCE_FLIP_GROUPS = ((8, 0.9), (8, 0.8), (8, 0.7), (8, 0.6), (8, 0.0))


class Method(str, Enum):
    SBRO = "sbro"
    RS = "rs"
    HQRS = "hqrs"
    ALL = "all"


class EmptyValue(str, Enum):
    PREVIOUS_GLOBAL = "previous_global"
    RANDOM_GUESS = "random_guess"


class Contribution(str, Enum):
    EXACT = "exact"
    MC = "mc"


@dataclass(frozen=True)
class ScenarioConfig:
    """Where the federation's data comes from and how it is split and corrupted."""

    num_classes: int = 2
    input_dim: int = 10
    class_separation: float = 3.0
    hidden_dims: tuple[int, ...] = ()
    num_clients: int = 40
    samples_total: int = 10_000
    flip_groups: tuple[tuple[int, float], ...] = REFERENCE_FLIP_GROUPS
    validation_size: int = 1_000
    test_size: int = 1_000
    seed: int = 0
    idx_images: str = ""
    idx_labels: str = ""
    fixture: str = ""

    def partition_spec(self, seed: int) -> PartitionSpec:
        return PartitionSpec(self.num_clients, self.samples_total, self.flip_groups, seed)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one run (or one comparison arm) depends on."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    bids: BidSpec = field(default_factory=BidSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    prospect: ProspectParams = field(default_factory=ProspectParams)
    update: UpdateParams = field(default_factory=UpdateParams)
    method: Method = Method.SBRO
    rounds: int = 150
    budget: float = 45.0
    delta: float = 0.5
    seed: int = 0
    empty_value: EmptyValue = EmptyValue.PREVIOUS_GLOBAL
    contribution: Contribution = Contribution.EXACT
    mc_permutations: int = 500
    metric: Metric = Metric.ACCURACY
    workers: int = 1
    last_k: int = 20
    output_path: str = "results/run.csv"

    def __post_init__(self):
        for name, enum_type in (
            ("method", Method), ("empty_value", EmptyValue),
            ("contribution", Contribution), ("metric", Metric),
        ):
            try:
                object.__setattr__(self, name, enum_type(getattr(self, name)))
            except ValueError as exc:
                raise ConfigError(f"{name}: {exc}") from exc
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if not self.budget > 0:
            raise ConfigError("budget must be positive")
        if not 0 < self.delta <= 1:
            raise ConfigError("delta must be in (0, 1]")
        if self.seed < 0 or self.scenario.seed < 0:
            raise ConfigError("seeds must be unsigned")
        if self.workers < 1 or self.mc_permutations < 1 or self.last_k < 1:
            raise ConfigError("workers, mc_permutations and last_k must be >= 1")
        if bool(self.scenario.idx_images) != bool(self.scenario.idx_labels):
            raise ConfigError("scenario.idx_images and scenario.idx_labels go together")
        if self.bids.mode is BidMode.TIERED and not self.bids.tiers:
            raise ConfigError("bids.tiers is required when bids.mode=tiered")
        try:
            self.scenario.partition_spec(self.scenario.seed)
        except SimulatorError as exc:
            raise ConfigError(f"scenario: {exc}") from exc

    def to_flat(self) -> dict[str, str]:
        """Resolved configuration in the dotted flat key space."""
        flat: dict[str, str] = {}
        for key, (section, name) in _schema().items():
            owner = getattr(self, section) if section else self
            flat[key] = _render(getattr(owner, name))
        return flat

    def with_overrides(self, values: Mapping[str, str]) -> "ExperimentConfig":
        """New config with flat (dotted or SBRO_ env style) keys applied."""
        schema = _schema()
        sections: dict[str, dict[str, Any]] = {}
        top: dict[str, Any] = {}
        for raw_key, raw_value in values.items():
            key = normalize_key(raw_key)
            if key not in schema:
                raise ConfigError(f"unknown config key '{raw_key}'")
            section, name = schema[key]
            owner = getattr(self, section) if section else self
            parsed = _parse(key, raw_value, getattr(owner, name))
            (sections.setdefault(section, {}) if section else top)[name] = parsed
        try:
            for section, changes in sections.items():
                top[section] = dataclasses.replace(getattr(self, section), **changes)
            return dataclasses.replace(self, **top)
        except ConfigError:
            raise
        except (SimulatorError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc


# Derived per client and round; not user-settable.
_HIDDEN_FIELDS = {("bids", "seed"), ("train", "seed")}
_SECTIONS = ("scenario", "bids", "train", "prospect", "update")


def _schema() -> dict[str, tuple[str, str]]:
    schema: dict[str, tuple[str, str]] = {}
    for top_field in dataclasses.fields(ExperimentConfig):
        if top_field.name in _SECTIONS:
            section_type = type(getattr(ExperimentConfig(), top_field.name))
            for inner in dataclasses.fields(section_type):
                if (top_field.name, inner.name) not in _HIDDEN_FIELDS:
                    schema[f"{top_field.name}.{inner.name}"] = (top_field.name, inner.name)
        else:
            schema[top_field.name] = ("", top_field.name)
    return schema


def normalize_key(key: str) -> str:
    """'SBRO_PROSPECT__ALPHA' and 'prospect.alpha' both become 'prospect.alpha'."""
    key = key.strip()
    if key.upper().startswith(ENV_PREFIX):
        key = key[len(ENV_PREFIX):]
    return key.replace("__", ".").lower()


def _render(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, Mapping):
        return ",".join(f"{k}:{v}" for k, v in sorted(value.items(), reverse=True))
    if isinstance(value, tuple):
        return ",".join(":".join(str(x) for x in item) if isinstance(item, tuple) else str(item) for item in value)
    return str(value)


def _pairs(key: str, text: str) -> list[tuple[str, str]]:
    pairs = []
    for chunk in filter(None, (c.strip() for c in text.split(","))):
        left, sep, right = chunk.partition(":")
        if not sep:
            raise ConfigError(f"{key}: expected 'a:b' items, got '{chunk}'")
        pairs.append((left.strip(), right.strip()))
    return pairs


def _parse(key: str, text: str | None, current: Any) -> Any:
    text = "" if text is None else str(text).strip()
    try:
        if key == "scenario.flip_groups":
            return tuple((int(c), float(r)) for c, r in _pairs(key, text))
        if key == "bids.tiers":
            return {float(r): float(b) for r, b in _pairs(key, text)}
        if key == "scenario.hidden_dims":
            return tuple(int(x) for x in text.split(",") if x.strip())
        if isinstance(current, Enum):
            return type(current)(text.lower())
        if isinstance(current, bool):
            return text.lower() in {"1", "true", "yes", "on"}
        if isinstance(current, int):
            return int(text)
        if isinstance(current, float):
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse '{text}' ({exc})") from exc


def parse_override(item: str) -> tuple[str, str]:
    """Split a '--override key=value' argument."""
    key, sep, value = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override '{item}' must look like key=value")
    return key.strip(), value


def load_config(
    path: str | Path | None = None,
    overrides: Iterable[str] = (),
    environ: Mapping[str, str] | None = None,
) -> ExperimentConfig:
    """
    Resolve an ExperimentConfig.

    Precedence, lowest first: defaults, the dotenv file at path, SBRO_*
    environment variables, then key=value overrides.

    Args:
        path: Optional dotenv config document
        overrides: 'key=value' strings (dotted or SBRO_ env style keys)
        environ: Environment to read SBRO_* keys from (defaults to os.environ)

    Returns:
        Validated ExperimentConfig
    """
    config = ExperimentConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        document = {k: v for k, v in dotenv_values(path).items() if k not in RESERVED_KEYS}
        config = config.with_overrides(document)

    environ = os.environ if environ is None else environ
    from_env = {
        k: v for k, v in environ.items()
        if k.startswith(ENV_PREFIX) and k not in RESERVED_KEYS
    }
    if from_env:
        config = config.with_overrides(from_env)

    parsed = dict(parse_override(item) for item in overrides)
    if parsed:
        config = config.with_overrides(parsed)
    return config
