"""
SBRO-FL Model Tool - multinomial logistic regression / tanh MLP, local SGD,
evaluation and FedAvg aggregation on flat parameter vectors
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from src.errors import EmptyDatasetError, NumericalError, ShapeError


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer labels in [0, num_classes)."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise ShapeError(f"features must be a matrix, got {features.ndim} dims")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise ShapeError(
                f"{features.shape[0]} feature rows but {labels.shape[0]} labels"
            )
        if self.num_classes < 1:
            raise ShapeError("num_classes must be positive")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise ShapeError(f"labels must lie in [0, {self.num_classes})")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.features[indices], self.labels[indices], self.num_classes)

    def with_labels(self, labels: np.ndarray) -> "Dataset":
        return Dataset(self.features, labels, self.num_classes)


@dataclass(frozen=True)
class TrainConfig:
    """Local SGD settings; learning_rate 0 freezes the model."""

    learning_rate: float = 0.01
    batch_size: int = 16
    local_steps: int = 20
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ShapeError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ShapeError("batch_size must be >= 1")
        if self.local_steps < 1:
            raise ShapeError("local_steps must be >= 1")


class Metric(str, Enum):
    ACCURACY = "accuracy"
    MACRO_RECALL = "macro_recall"


def parameter_count(shape: Sequence[int]) -> int:
    """Number of weights plus biases implied by a layer-shape descriptor."""
    return sum(fan_in * fan_out + fan_out for fan_in, fan_out in zip(shape[:-1], shape[1:]))


def _check_shape(shape: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in shape)
    if len(dims) < 2:
        raise ShapeError(f"shape needs input and output dims, got {dims}")
    if any(d < 1 for d in dims):
        raise ShapeError(f"all layer dims must be >= 1, got {dims}")
    return dims


@dataclass(frozen=True)
class ModelParams:
    """
    Flat parameter vector plus the layer dims it encodes.

    Layout: for each layer, the (fan_in x fan_out) weight matrix in row-major
    order followed by its bias vector.
    """

    values: np.ndarray
    shape: tuple[int, ...]

    def __post_init__(self):
        dims = _check_shape(self.shape)
        values = np.array(self.values, dtype=np.float64).reshape(-1)
        if values.shape[0] != parameter_count(dims):
            raise ShapeError(
                f"shape {dims} needs {parameter_count(dims)} values, got {values.shape[0]}"
            )
        if not np.all(np.isfinite(values)):
            raise NumericalError("parameters contain NaN or Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "shape", dims)

    @property
    def num_classes(self) -> int:
        return self.shape[-1]

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Read-only (weight, bias) views into values."""
        return _unpack(self.values, self.shape)


def _unpack(values: np.ndarray, shape: tuple[int, ...]) -> list[tuple[np.ndarray, np.ndarray]]:
    layers = []
    offset = 0
    for fan_in, fan_out in zip(shape[:-1], shape[1:]):
        weight = values[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        bias = values[offset:offset + fan_out]
        offset += fan_out
        layers.append((weight, bias))
    return layers


def init_model(shape: Sequence[int], seed: int) -> ModelParams:
    """
    Deterministic initialization, every entry uniform in [-s, s] with
    s = 1/sqrt(fan_in) of its layer.

    Args:
        shape: (input_dim, hidden_dims..., num_classes)
        seed: Initialization seed

    Returns:
        Fresh ModelParams
    """
    dims = _check_shape(shape)
    rng = np.random.default_rng(seed)
    chunks = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        chunks.append(rng.uniform(-scale, scale, size=fan_in * fan_out + fan_out))
    return ModelParams(np.concatenate(chunks), dims)


def _check_compatible(params: ModelParams, data: Dataset) -> None:
    if len(data) == 0:
        raise EmptyDatasetError("dataset has no samples")
    if data.input_dim != params.shape[0]:
        raise ShapeError(f"model expects {params.shape[0]} features, data has {data.input_dim}")
    if data.num_classes > params.num_classes:
        raise ShapeError(
            f"model has {params.num_classes} outputs, data has {data.num_classes} classes"
        )


def _forward(layers, features: np.ndarray) -> list[np.ndarray]:
    """Activations per layer; the last entry holds the logits."""
    activations = [features]
    for index, (weight, bias) in enumerate(layers):
        z = activations[-1] @ weight + bias
        activations.append(z if index == len(layers) - 1 else np.tanh(z))
    return activations


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _loss_and_grad(values: np.ndarray, shape, features: np.ndarray, labels: np.ndarray):
    layers = _unpack(values, shape)
    activations = _forward(layers, features)
    logits = activations[-1]
    n = features.shape[0]

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(log_norm - shifted[np.arange(n), labels]))

    delta = _softmax(logits)
    delta[np.arange(n), labels] -= 1.0
    delta /= n

    grads = []
    for index in range(len(layers) - 1, -1, -1):
        weight, _ = layers[index]
        inputs = activations[index]
        grads.append((inputs.T @ delta, delta.sum(axis=0)))
        if index > 0:
            delta = (delta @ weight.T) * (1.0 - inputs ** 2)
    grads.reverse()
    flat = np.concatenate([np.concatenate([gw.reshape(-1), gb]) for gw, gb in grads])
    return loss, flat


def loss_and_gradient(params: ModelParams, data: Dataset) -> tuple[float, np.ndarray]:
    """
    Mean softmax cross-entropy over data and its gradient in the flat layout.

    Args:
        params: Model parameters
        data: Samples to average the loss over

    Returns:
        (loss, gradient vector with len(params.values) entries)
    """
    _check_compatible(params, data)
    return _loss_and_grad(params.values, params.shape, data.features, data.labels)


def local_train(params: ModelParams, data: Dataset, cfg: TrainConfig) -> ModelParams:
    """
    Run cfg.local_steps mini-batch SGD steps from params on data.

    Batches come from a seeded shuffle without replacement; the last partial
    batch of a pass is used, then the data is reshuffled.

    Args:
        params: Incoming (global) model, left unmodified
        data: The client's local dataset
        cfg: Learning rate, batch size, step count and shuffle seed

    Returns:
        The locally trained parameters
    """
    _check_compatible(params, data)
    rng = np.random.default_rng(cfg.seed)
    values = params.values.copy()
    n = len(data)
    order = rng.permutation(n)
    cursor = 0
    for _ in range(cfg.local_steps):
        if cursor >= n:
            order = rng.permutation(n)
            cursor = 0
        batch = order[cursor:cursor + cfg.batch_size]
        cursor += cfg.batch_size
        _, grad = _loss_and_grad(values, params.shape, data.features[batch], data.labels[batch])
        values -= cfg.learning_rate * grad
    if not np.all(np.isfinite(values)):
        raise NumericalError(
            f"local training diverged (learning_rate={cfg.learning_rate}); lower the rate"
        )
    return ModelParams(values, params.shape)


def predict(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties resolve to the lowest class index."""
    logits = _forward(params.layers(), np.asarray(features, dtype=np.float64))[-1]
    return np.argmax(logits, axis=1)


def evaluate(params: ModelParams, data: Dataset, metric: Metric = Metric.ACCURACY) -> float:
    """
    Score params on data.

    Args:
        params: Model to evaluate
        data: Labelled samples
        metric: accuracy (default) or macro-averaged recall

    Returns:
        Score in [0, 1]
    """
    _check_compatible(params, data)
    predictions = predict(params, data.features)
    correct = predictions == data.labels
    if Metric(metric) is Metric.ACCURACY:
        return float(np.count_nonzero(correct)) / len(data)

    recalls = []
    for label in range(data.num_classes):
        mask = data.labels == label
        if mask.any():
            recalls.append(np.count_nonzero(correct[mask]) / np.count_nonzero(mask))
    return float(np.mean(recalls))


def aggregate(updates: Sequence[tuple[ModelParams, float]]) -> ModelParams:
    """
    FedAvg: weighted mean of parameter vectors, weights normalized to sum 1.

    Args:
        updates: (params, non-negative weight) pairs, typically weight = |D_i|

    Returns:
        Aggregated parameters
    """
    if not updates:
        raise ShapeError("aggregate needs at least one update")
    shape = updates[0][0].shape
    weights = np.array([float(w) for _, w in updates], dtype=np.float64)
    if any(p.shape != shape for p, _ in updates):
        raise ShapeError("all updates must share one layer shape")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ShapeError("aggregation weights must be finite and non-negative")
    total = weights.sum()
    if total <= 0:
        raise ShapeError("aggregation weights sum to zero")

    result = np.zeros_like(updates[0][0].values)
    for (params, _), weight in zip(updates, weights / total):
        result += weight * params.values
    return ModelParams(result, shape)
