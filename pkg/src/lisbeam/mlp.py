"""From-scratch multilayer perceptron trained by mini-batch MSE regression.

Q fully-connected layers; ReLU and (inverted) dropout follow each of the
first Q-1 layers, the last layer is a plain affine map. Training supports
plain SGD and Adam, shuffles per epoch from a single seeded generator, and is
bit-reproducible for a fixed seed under serial execution.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""


@dataclass
class TrainConfig:
    """Hyperparameters for one training run.

    ``dropout_rate=None`` keeps the rate stored on the model; setting it
    overrides the model's rate for this run.
    """

    epochs: int
    batch_size: int = 500
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    split_fraction: float = 0.85
    seed: int = 0
    dropout_rate: float | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 < self.split_fraction < 1:
            raise ValueError("split_fraction must be in (0, 1)")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.dropout_rate is not None and not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must be in [0, 1)")


@dataclass
class MlpModel:
    """Fully-connected network parameters.

    ``weights[q]`` has shape (layer_sizes[q], layer_sizes[q+1]) so a batch
    row-vector input propagates as ``x @ W + b``.
    """

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    dropout_rate: float = 0.5
    seed: int = 0

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]


def initialize_mlp(layer_sizes: list[int], dropout_rate: float = 0.5, seed: int = 0) -> MlpModel:
    """Fan-in-scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)), for
    weights and biases.

    Larger (He-normal) weights make heavily-dropped-out narrow networks
    collapse onto the mean predictor on this task family; the smaller uniform
    scale trains reliably with dropout on and off.
    """
    if len(layer_sizes) < 2:
        raise ValueError("layer_sizes needs at least input and output sizes")
    if any(n < 1 for n in layer_sizes):
        raise ValueError("all layer sizes must be >= 1")
    if not 0 <= dropout_rate < 1:
        raise ValueError("dropout_rate must be in [0, 1)")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, fan_out))
    return MlpModel(layer_sizes=list(layer_sizes), weights=weights, biases=biases,
                    dropout_rate=dropout_rate, seed=seed)


def default_layer_sizes(input_size: int, num_codewords: int) -> list[int]:
    """Standard architecture: hidden sizes N, 4N, 4N leading into N outputs."""
    n = num_codewords
    return [input_size, n, 4 * n, 4 * n, n]


def _forward_train(
    model: MlpModel, x: np.ndarray, rng: np.random.Generator, dropout_rate: float
):
    """Forward pass with inverted dropout; returns output and backprop caches."""
    activations = [x]
    relu_masks = []
    dropout_masks = []
    out = x
    for q in range(model.num_layers - 1):
        z = out @ model.weights[q] + model.biases[q]
        relu_masks.append(z > 0)
        out = np.where(relu_masks[-1], z, 0.0)
        if dropout_rate > 0:
            mask = (rng.random(out.shape) >= dropout_rate) / (1.0 - dropout_rate)
            out = out * mask
            dropout_masks.append(mask)
        else:
            dropout_masks.append(None)
        activations.append(out)
    out = out @ model.weights[-1] + model.biases[-1]
    return out, activations, relu_masks, dropout_masks


def forward(
    model: MlpModel,
    x: np.ndarray,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Evaluate the network on a single vector or a batch of row vectors.

    ``mode="train"`` applies inverted dropout (needs ``rng``); ``mode="eval"``
    applies no dropout and no rescaling.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.input_size:
        raise ValueError(f"input size {x.shape[1]} does not match model input {model.input_size}")
    if mode == "train":
        if rng is None:
            raise ValueError("train-mode forward requires an rng for the dropout masks")
        out, _, _, _ = _forward_train(model, x, rng, model.dropout_rate)
    elif mode == "eval":
        out = x
        for q in range(model.num_layers - 1):
            out = np.maximum(out @ model.weights[q] + model.biases[q], 0.0)
        out = out @ model.weights[-1] + model.biases[-1]
    else:
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    return out[0] if single else out


def mse(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared error over all entries."""
    return float(np.mean((np.asarray(predictions) - np.asarray(targets)) ** 2))


def _backprop(model, activations, relu_masks, dropout_masks, output, targets):
    """Gradients of the batch MSE w.r.t. every weight and bias."""
    batch = output.shape[0]
    delta = 2.0 * (output - targets) / (batch * model.output_size)
    grads_w = [None] * model.num_layers
    grads_b = [None] * model.num_layers
    grads_w[-1] = activations[-1].T @ delta
    grads_b[-1] = delta.sum(axis=0)
    for q in range(model.num_layers - 2, -1, -1):
        delta = delta @ model.weights[q + 1].T
        if dropout_masks[q] is not None:
            delta = delta * dropout_masks[q]
        delta = delta * relu_masks[q]
        grads_w[q] = activations[q].T @ delta
        grads_b[q] = delta.sum(axis=0)
    return grads_w, grads_b


def loss_and_gradients(
    model: MlpModel, inputs: np.ndarray, targets: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Batch MSE and its gradients with dropout disabled (deterministic path)."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    out, activations, relu_masks, dropout_masks = _forward_train(
        model, inputs, np.random.default_rng(0), dropout_rate=0.0
    )
    grads_w, grads_b = _backprop(model, activations, relu_masks, dropout_masks, out, targets)
    return mse(out, targets), grads_w, grads_b


@dataclass
class TrainLog:
    """Per-epoch metrics from one training run."""

    train_mse: list[float] = field(default_factory=list)
    validation_mse: list[float] = field(default_factory=list)
    num_train: int = 0
    num_validation: int = 0


class _Adam:
    def __init__(self, model: MlpModel, config: TrainConfig):
        self.m_w = [np.zeros_like(w) for w in model.weights]
        self.v_w = [np.zeros_like(w) for w in model.weights]
        self.m_b = [np.zeros_like(b) for b in model.biases]
        self.v_b = [np.zeros_like(b) for b in model.biases]
        self.t = 0
        self.config = config

    def step(self, model, grads_w, grads_b):
        cfg = self.config
        self.t += 1
        correction1 = 1.0 - cfg.beta1**self.t
        correction2 = 1.0 - cfg.beta2**self.t
        for q in range(model.num_layers):
            for grad, m, v, param in (
                (grads_w[q], self.m_w[q], self.v_w[q], model.weights[q]),
                (grads_b[q], self.m_b[q], self.v_b[q], model.biases[q]),
            ):
                m *= cfg.beta1
                m += (1.0 - cfg.beta1) * grad
                v *= cfg.beta2
                v += (1.0 - cfg.beta2) * grad**2
                param -= cfg.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + cfg.epsilon)


def train(
    model: MlpModel, inputs: np.ndarray, targets: np.ndarray, config: TrainConfig
) -> TrainLog:
    """Fit the model in place by mini-batch gradient descent on the MSE.

    The dataset is split (train/validation) once with the configured seed,
    shuffled every epoch, and the log records train and validation MSE per
    epoch. Raises :class:`TrainingDivergedError` on a non-finite loss.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if inputs.ndim != 2 or targets.ndim != 2 or inputs.shape[0] != targets.shape[0]:
        raise ValueError("inputs and targets must be matching 2-D sample arrays")
    if inputs.shape[0] < 1:
        raise ValueError("dataset must not be empty")
    if inputs.shape[1] != model.input_size or targets.shape[1] != model.output_size:
        raise ValueError("dataset dimensions do not match the model")

    dropout_rate = model.dropout_rate if config.dropout_rate is None else config.dropout_rate
    rng = np.random.default_rng(config.seed)
    num_samples = inputs.shape[0]
    permutation = rng.permutation(num_samples)
    num_train = max(1, int(round(config.split_fraction * num_samples)))
    train_idx, val_idx = permutation[:num_train], permutation[num_train:]
    x_train, y_train = inputs[train_idx], targets[train_idx]
    x_val, y_val = inputs[val_idx], targets[val_idx]

    log = TrainLog(num_train=len(train_idx), num_validation=len(val_idx))
    adam = _Adam(model, config) if config.optimizer == "adam" else None
    for epoch in range(config.epochs):
        order = rng.permutation(num_train)
        epoch_loss = 0.0
        for start in range(0, num_train, config.batch_size):
            batch = order[start : start + config.batch_size]
            out, activations, relu_masks, dropout_masks = _forward_train(
                model, x_train[batch], rng, dropout_rate
            )
            batch_loss = mse(out, y_train[batch])
            if not np.isfinite(batch_loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch starting {start} "
                    f"(learning_rate={config.learning_rate}, optimizer={config.optimizer})"
                )
            epoch_loss += batch_loss * len(batch)
            grads_w, grads_b = _backprop(model, activations, relu_masks, dropout_masks, out, y_train[batch])
            if adam is not None:
                adam.step(model, grads_w, grads_b)
            else:
                for q in range(model.num_layers):
                    model.weights[q] -= config.learning_rate * grads_w[q]
                    model.biases[q] -= config.learning_rate * grads_b[q]
        log.train_mse.append(epoch_loss / num_train)
        if len(val_idx):
            log.validation_mse.append(mse(forward(model, x_val), y_val))
        else:
            log.validation_mse.append(float("nan"))
    return log


# ---------------------------------------------------------------------------
# Model container: 8-byte magic, uint32 version, JSON header with the layer
# sizes / dropout rate / input scale / seed, then the raw float64 parameter
# arrays in layer order (weights row-major, then bias, per layer).
# ---------------------------------------------------------------------------

_MODEL_MAGIC = b"LISMLPV\x00"
_MODEL_VERSION = 1


def save_model(model: MlpModel, input_scale: float, path: str) -> None:
    """Persist the model with the input normalization scale frozen at training time."""
    header = {
        "layer_sizes": model.layer_sizes,
        "dropout_rate": model.dropout_rate,
        "input_scale": input_scale,
        "seed": model.seed,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(struct.pack("<I", _MODEL_VERSION))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for w, b in zip(model.weights, model.biases):
            fh.write(np.ascontiguousarray(w, dtype=np.float64).tobytes())
            fh.write(np.ascontiguousarray(b, dtype=np.float64).tobytes())


def load_model(path: str) -> tuple[MlpModel, float]:
    """Load a model file; returns the model and its frozen input scale."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MODEL_MAGIC:
            raise ValueError(f"not a model file (bad magic {magic!r})")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _MODEL_VERSION:
            raise ValueError(f"unsupported model file version {version}")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        sizes = [int(n) for n in header["layer_sizes"]]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = np.frombuffer(fh.read(8 * fan_in * fan_out), dtype=np.float64).reshape(fan_in, fan_out)
            b = np.frombuffer(fh.read(8 * fan_out), dtype=np.float64)
            weights.append(w.copy())
            biases.append(b.copy())
    model = MlpModel(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        dropout_rate=float(header["dropout_rate"]),
        seed=int(header["seed"]),
    )
    return model, float(header["input_scale"])
