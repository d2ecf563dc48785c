"""
SBRO-FL Scenario - the shared federation every arm of a comparison runs on:
client shards with flipped labels, bids, and the server's validation/test sets
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from loguru import logger

from src.config import ExperimentConfig
from src.errors import DataFormatError
from src.seeding import derive_seed
from src.tools.model_tool import Dataset
from src.tools.partition_tool import (
    ClientDataset,
    flip_labels,
    generate_bids,
    generate_synthetic,
    load_idx,
    partition,
    split_holdout,
)


@dataclass(frozen=True)
class Scenario:
    """Clients ordered by id, their bids, and the clean server-side holdouts."""

    clients: tuple[ClientDataset, ...]
    bids: np.ndarray
    validation: Dataset
    test: Dataset

    @property
    def num_clients(self) -> int:
        return len(self.clients)

    @property
    def num_classes(self) -> int:
        return self.validation.num_classes

    @property
    def input_dim(self) -> int:
        return self.validation.input_dim

    @property
    def clean_ids(self) -> tuple[int, ...]:
        return tuple(c.client_id for c in self.clients if c.is_clean)

    def model_shape(self, hidden_dims: tuple[int, ...] = ()) -> tuple[int, ...]:
        return (self.input_dim, *hidden_dims, self.num_classes)


def build_scenario(cfg: ExperimentConfig) -> Scenario:
    """
    Build the federation from cfg.scenario and cfg.bids.

    Every random step draws from its own child of the scenario seed, so the
    algorithmic seed (cfg.seed) never changes the data.

    Args:
        cfg: Experiment configuration

    Returns:
        Scenario shared by every arm that uses the same scenario settings
    """
    sc = cfg.scenario
    if sc.fixture:
        return load_fixture(sc.fixture)

    holdout = sc.validation_size + sc.test_size
    if sc.idx_images:
        pool = load_idx(sc.idx_images, sc.idx_labels, sc.num_classes)
    else:
        pool = generate_synthetic(
            sc.num_classes, sc.input_dim, sc.samples_total + holdout,
            sc.class_separation, derive_seed(sc.seed, "data"),
        )

    validation, rest = split_holdout(pool, sc.validation_size, derive_seed(sc.seed, "validation"))
    if sc.test_size > 0:
        test, rest = split_holdout(rest, sc.test_size, derive_seed(sc.seed, "test"))
    else:
        test = validation

    clients = partition(rest, sc.partition_spec(derive_seed(sc.seed, "partition")))
    clients = [
        flip_labels(c, pool.num_classes, derive_seed(sc.seed, "flip", c.client_id))
        for c in clients
    ]
    bids = generate_bids(replace(cfg.bids, seed=derive_seed(sc.seed, "bids")), clients)

    logger.info(
        f"✓ [Scenario] {len(clients)} clients, {sum(c.is_clean for c in clients)} clean, "
        f"bids {bids.min():.2f}..{bids.max():.2f} (scenario seed {sc.seed})"
    )
    return Scenario(tuple(clients), bids, validation, test)


def save_fixture(scenario: Scenario, path: str | Path) -> Path:
    """Write the scenario to a compressed .npz archive."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays: dict[str, np.ndarray] = {
        "num_classes": np.array(scenario.num_classes),
        "bids": scenario.bids,
        "flip_ratios": np.array([c.flip_ratio for c in scenario.clients]),
        "val_features": scenario.validation.features,
        "val_labels": scenario.validation.labels,
        "test_features": scenario.test.features,
        "test_labels": scenario.test.labels,
    }
    for c in scenario.clients:
        arrays[f"client{c.client_id}_features"] = c.data.features
        arrays[f"client{c.client_id}_labels"] = c.data.labels
        arrays[f"client{c.client_id}_original"] = c.original_labels
    with path.open("wb") as handle:
        np.savez_compressed(handle, **arrays)
    logger.info(f"✓ [Scenario] Fixture written to {path}")
    return path


def load_fixture(path: str | Path) -> Scenario:
    """Read a scenario written by save_fixture."""
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as archive:
            k = int(archive["num_classes"])
            ratios = archive["flip_ratios"]
            clients = tuple(
                ClientDataset(
                    i,
                    Dataset(archive[f"client{i}_features"], archive[f"client{i}_labels"], k),
                    float(ratios[i]),
                    archive[f"client{i}_original"].astype(np.int64),
                )
                for i in range(ratios.shape[0])
            )
            scenario = Scenario(
                clients,
                archive["bids"].astype(np.float64),
                Dataset(archive["val_features"], archive["val_labels"], k),
                Dataset(archive["test_features"], archive["test_labels"], k),
            )
    except KeyError as exc:
        raise DataFormatError(f"{path}: fixture is missing {exc}") from exc
    logger.info(f"✓ [Scenario] Loaded fixture {path} ({scenario.num_clients} clients)")
    return scenario
