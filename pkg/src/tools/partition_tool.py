"""
SBRO-FL Partition Tool - synthetic data, equal client shards, label flipping,
bid generation and the IDX (MNIST-format) loader
"""
from __future__ import annotations

import gzip
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from loguru import logger

from src.errors import BidError, DataFormatError, PartitionError
from src.tools.model_tool import Dataset

IDX_IMAGES_MAGIC = 2051
IDX_LABELS_MAGIC = 2049


@dataclass(frozen=True)
class ClientDataset:
    """One client's shard and its label-quality ground truth."""

    client_id: int
    data: Dataset
    flip_ratio: float = 0.0
    original_labels: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.flip_ratio <= 1.0:
            raise PartitionError(f"flip_ratio must be in [0, 1], got {self.flip_ratio}")
        if self.original_labels is None:
            object.__setattr__(self, "original_labels", self.data.labels.copy())

    @property
    def is_clean(self) -> bool:
        return self.flip_ratio == 0.0

    def __len__(self) -> int:
        return len(self.data)


@dataclass(frozen=True)
class PartitionSpec:
    """How many clients, how many samples, and which flip ratio each group gets."""

    num_clients: int = 40
    samples_total: int = 10_000
    flip_groups: tuple[tuple[int, float], ...] = ((8, 0.9), (8, 0.8), (8, 0.7), (8, 0.6), (8, 0.0))
    seed: int = 0

    def __post_init__(self):
        if self.num_clients < 1 or self.samples_total < 1:
            raise PartitionError("num_clients and samples_total must be positive")
        groups = tuple((int(count), float(ratio)) for count, ratio in self.flip_groups)
        if sum(count for count, _ in groups) != self.num_clients:
            raise PartitionError(
                f"flip group counts sum to {sum(c for c, _ in groups)}, "
                f"expected {self.num_clients} clients"
            )
        if any(count < 0 or not 0.0 <= ratio <= 1.0 for count, ratio in groups):
            raise PartitionError("flip group counts must be >= 0 and ratios in [0, 1]")
        object.__setattr__(self, "flip_groups", groups)


class BidMode(str, Enum):
    GAUSSIAN = "gaussian"
    TIERED = "tiered"


@dataclass(frozen=True)
class BidSpec:
    """Gaussian bids N(mean, variance) clamped at floor, or a flip-ratio -> bid table."""

    mode: BidMode = BidMode.GAUSSIAN
    mean: float = 10.0
    variance: float = 1.0
    tiers: Mapping[float, float] = field(default_factory=dict)
    floor: float = 0.01
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", BidMode(self.mode))
        if not self.floor > 0:
            raise BidError(f"bid floor must be positive, got {self.floor}")
        if self.variance < 0:
            raise BidError(f"bid variance must be >= 0, got {self.variance}")
        if any(bid <= 0 for bid in self.tiers.values()):
            raise BidError("tiered bids must be positive")


def generate_synthetic(
    num_classes: int,
    input_dim: int,
    samples: int,
    class_separation: float,
    seed: int,
) -> Dataset:
    """
    Isotropic Gaussian blobs, one per class, with unit covariance and means
    drawn on a sphere of radius class_separation.

    Class counts differ by at most one.

    Args:
        num_classes: Number of blobs
        input_dim: Feature dimension
        samples: Total sample count (>= num_classes)
        class_separation: Radius of the sphere the class means lie on
        seed: Generation seed

    Returns:
        Dataset with shuffled rows
    """
    if num_classes < 1 or input_dim < 1:
        raise PartitionError("num_classes and input_dim must be >= 1")
    if samples < num_classes:
        raise PartitionError(f"need at least {num_classes} samples, got {samples}")
    if not class_separation > 0:
        raise PartitionError("class_separation must be positive")

    rng = np.random.default_rng(seed)
    directions = rng.standard_normal((num_classes, input_dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    means = class_separation * directions / np.where(norms > 0, norms, 1.0)

    labels = rng.permutation(np.arange(samples) % num_classes)
    features = means[labels] + rng.standard_normal((samples, input_dim))
    return Dataset(features, labels, num_classes)


def split_holdout(data: Dataset, size: int, seed: int) -> tuple[Dataset, Dataset]:
    """
    Carve a server-side holdout (validation or test set) off a clean pool.

    Args:
        data: Pool to split
        size: Holdout sample count
        seed: Split seed

    Returns:
        (holdout, remainder)
    """
    if not 0 < size < len(data):
        raise PartitionError(f"holdout size {size} must be in (0, {len(data)})")
    order = np.random.default_rng(seed).permutation(len(data))
    return data.subset(np.sort(order[:size])), data.subset(np.sort(order[size:]))


def partition(data: Dataset, spec: PartitionSpec) -> list[ClientDataset]:
    """
    Split spec.samples_total seeded-shuffled samples into equal disjoint shards
    and assign flip groups to a seeded permutation of client ids.

    Flip ratios are recorded only; flip_labels applies them.

    Args:
        data: Clean training pool
        spec: Client count, sample budget and flip groups

    Returns:
        Clients ordered by client_id
    """
    if spec.samples_total > len(data):
        raise PartitionError(f"samples_total {spec.samples_total} exceeds pool size {len(data)}")
    if spec.samples_total % spec.num_clients:
        raise PartitionError(
            f"samples_total {spec.samples_total} is not divisible by {spec.num_clients} clients"
        )

    rng = np.random.default_rng(spec.seed)
    chosen = rng.permutation(len(data))[:spec.samples_total]
    shards = np.split(chosen, spec.num_clients)

    ratios = np.zeros(spec.num_clients)
    client_order = rng.permutation(spec.num_clients)
    cursor = 0
    for count, ratio in spec.flip_groups:
        ratios[client_order[cursor:cursor + count]] = ratio
        cursor += count

    clients = [
        ClientDataset(client_id, data.subset(shard), float(ratios[client_id]))
        for client_id, shard in enumerate(shards)
    ]
    logger.debug(
        f"[Partition] {spec.num_clients} clients x {spec.samples_total // spec.num_clients} samples, "
        f"{sum(c.is_clean for c in clients)} clean"
    )
    return clients


def flip_count(flip_ratio: float, size: int) -> int:
    """round-half-up(flip_ratio * size)."""
    return int(math.floor(flip_ratio * size + 0.5))


def flip_labels(cd: ClientDataset, num_classes: int, seed: int) -> ClientDataset:
    """
    Replace exactly round(flip_ratio * |D_i|) labels with a uniformly chosen
    different class.

    Args:
        cd: Client whose recorded flip_ratio is applied
        num_classes: Label alphabet size
        seed: Flip seed

    Returns:
        New ClientDataset; original_labels keeps the clean labels
    """
    if cd.flip_ratio == 0.0:
        return cd
    if num_classes < 2:
        raise PartitionError("label flipping needs at least 2 classes")

    rng = np.random.default_rng(seed)
    count = flip_count(cd.flip_ratio, len(cd))
    positions = rng.choice(len(cd), size=count, replace=False)
    labels = cd.original_labels.copy()
    offsets = rng.integers(1, num_classes, size=count)
    labels[positions] = (labels[positions] + offsets) % num_classes
    return replace(cd, data=cd.data.with_labels(labels), original_labels=cd.original_labels.copy())


def _tier_key(ratio: float) -> float:
    return round(float(ratio), 6)


def generate_bids(spec: BidSpec, clients: Sequence[ClientDataset]) -> np.ndarray:
    """
    Bid price B_i for every client.

    Gaussian mode draws one normal value per client and clamps at spec.floor
    (never resamples); tiered mode looks the price up by flip ratio.

    Args:
        spec: Bid generation settings
        clients: Federation, ordered by client_id

    Returns:
        Strictly positive bid vector
    """
    if spec.mode is BidMode.GAUSSIAN:
        rng = np.random.default_rng(spec.seed)
        draws = rng.normal(spec.mean, math.sqrt(spec.variance), size=len(clients))
        return np.maximum(draws, spec.floor)

    tiers = {_tier_key(ratio): float(bid) for ratio, bid in spec.tiers.items()}
    missing = sorted({c.flip_ratio for c in clients if _tier_key(c.flip_ratio) not in tiers})
    if missing:
        raise BidError(f"no bid tier for flip ratios {missing}")
    return np.array([tiers[_tier_key(c.flip_ratio)] for c in clients], dtype=np.float64)


def _read_idx(path: Path, expected_magic: int) -> tuple[np.ndarray, tuple[int, ...]]:
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as handle:
        raw = handle.read()
    if len(raw) < 8:
        raise DataFormatError(f"{path}: truncated IDX header")
    magic = int(np.frombuffer(raw, dtype=">u4", count=1)[0])
    if magic != expected_magic:
        raise DataFormatError(f"{path}: bad magic number {magic}, expected {expected_magic}")
    ndims = raw[3]
    header_size = 4 + 4 * ndims
    if len(raw) < header_size:
        raise DataFormatError(f"{path}: truncated IDX header")
    dims = tuple(int(d) for d in np.frombuffer(raw, dtype=">u4", count=ndims, offset=4))
    expected = int(np.prod(dims))
    if len(raw) - header_size < expected:
        raise DataFormatError(f"{path}: truncated, expected {expected} data bytes")
    data = np.frombuffer(raw, dtype=np.uint8, count=expected, offset=header_size)
    return data, dims


def load_idx(images_path: str | Path, labels_path: str | Path, num_classes: int | None = None) -> Dataset:
    """
    Load an MNIST-format image/label pair (optionally gzip-compressed).

    Args:
        images_path: IDX3 image file (magic 2051)
        labels_path: IDX1 label file (magic 2049)
        num_classes: Label alphabet size (defaults to max label + 1)

    Returns:
        Dataset of row-flattened pixels scaled to [0, 1]
    """
    pixels, image_dims = _read_idx(Path(images_path), IDX_IMAGES_MAGIC)
    labels, label_dims = _read_idx(Path(labels_path), IDX_LABELS_MAGIC)
    if len(image_dims) != 3 or len(label_dims) != 1:
        raise DataFormatError("IDX images need 3 dims and labels 1 dim")
    if image_dims[0] != label_dims[0]:
        raise DataFormatError(f"{image_dims[0]} images but {label_dims[0]} labels")

    count, rows, cols = image_dims
    features = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0
    labels = labels.astype(np.int64)
    classes = num_classes if num_classes is not None else int(labels.max(initial=0)) + 1
    logger.info(f"✓ [Partition] Loaded {count} IDX images ({rows}x{cols}) from {images_path}")
    return Dataset(features, labels, classes)
