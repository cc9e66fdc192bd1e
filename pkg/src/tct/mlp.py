"""Scheme 2: a 10-10-4-1 perceptron regressor.

Two log-sigmoid hidden layers feed a linear output unit. Training is
full-batch gradient descent with momentum and an adaptive learning rate:

* a step whose training MSE exceeds ``max_perf_inc`` times the current MSE
  is rejected and the learning rate shrinks by ``lr_dec``;
* an accepted step that lowers the MSE grows the rate by ``lr_inc``.

Training stops on the first of: MSE at or below ``goal``, gradient norm
below ``min_grad``, ``max_fail`` consecutive validation checks without a
new best, or ``max_epochs``. The network with the lowest validation MSE
is returned.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.special import expit

from .evaluation import DetectionMap
from .exceptions import ArgumentError, NumericError
from .regressors._base import PixelRegressor

__all__ = [
    "LAYER_SIZES",
    "MlpNetwork",
    "TrainConfig",
    "TrainReport",
    "init_mlp",
    "forward",
    "gradient",
    "train",
    "predict_map",
    "MLPRegressor",
]

LAYER_SIZES = (10, 10, 4, 1)
STOP_REASONS = ("performance", "gradient", "validation", "max_epochs")

_INIT_SALT = 0x1A17
_SPLIT_SALT = 0x5B117


@dataclass(frozen=True, eq=False)
class MlpNetwork:
    """Weights ``W[l]`` of shape ``(n_in, n_out)`` and biases ``b[l]`` per layer."""

    weights: tuple
    biases: tuple
    layer_sizes: tuple = LAYER_SIZES

    def __post_init__(self):
        weights = tuple(np.array(w, dtype=np.float64).reshape(a, b)
                        for w, a, b in zip(self.weights, self.layer_sizes[:-1], self.layer_sizes[1:]))
        biases = tuple(np.array(b, dtype=np.float64).reshape(n)
                       for b, n in zip(self.biases, self.layer_sizes[1:]))
        if len(weights) != len(self.layer_sizes) - 1 or len(biases) != len(weights):
            raise ArgumentError("layer count does not match layer_sizes")
        for arr in weights + biases:
            if not np.all(np.isfinite(arr)):
                raise NumericError("network parameters are not finite")
            arr.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "layer_sizes", tuple(self.layer_sizes))

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)])

    @classmethod
    def from_flat(cls, vector, layer_sizes=LAYER_SIZES) -> "MlpNetwork":
        weights, biases, pos = [], [], 0
        for a, b in zip(layer_sizes[:-1], layer_sizes[1:]):
            weights.append(vector[pos:pos + a * b].reshape(a, b))
            pos += a * b
            biases.append(vector[pos:pos + b])
            pos += b
        return cls(tuple(weights), tuple(biases), tuple(layer_sizes))

    def equals(self, other: "MlpNetwork") -> bool:
        return self.layer_sizes == other.layer_sizes and np.array_equal(self.flat(), other.flat())

    def to_dict(self) -> dict:
        return {
            "layer_sizes": list(self.layer_sizes),
            "activations": ["logsig"] * (len(self.layer_sizes) - 2) + ["linear"],
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpNetwork":
        return cls(tuple(doc["weights"]), tuple(doc["biases"]), tuple(doc["layer_sizes"]))


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 0.01
    lr_inc: float = 1.05
    lr_dec: float = 0.7
    max_perf_inc: float = 1.04
    momentum: float = 0.9
    max_epochs: int = 1000
    goal: float = 0.0
    min_grad: float = 1e-5
    max_fail: int = 6
    split: tuple = (0.70, 0.15, 0.15)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "split", tuple(float(s) for s in self.split))
        if len(self.split) != 3 or any(s < 0 for s in self.split) or abs(sum(self.split) - 1.0) > 1e-9:
            raise ArgumentError(f"split must be three non-negative fractions summing to 1, got {self.split}")
        for name in ("lr0", "lr_inc", "lr_dec", "max_perf_inc"):
            if not getattr(self, name) > 0:
                raise ArgumentError(f"{name} must be positive")
        if not 0 <= self.momentum < 1:
            raise ArgumentError("momentum must lie in [0, 1)")
        if self.max_fail < 1 or self.max_epochs < 1:
            raise ArgumentError("max_fail and max_epochs must be at least 1")

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ArgumentError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass(eq=False)
class TrainReport:
    epochs_run: int
    stop_reason: str
    train_mse: np.ndarray
    test_mse: np.ndarray
    val_mse: np.ndarray
    lr: np.ndarray
    grad_norm: np.ndarray
    accepted: np.ndarray
    best_epoch: int
    final_grad_norm: float
    snapshot_restored: bool
    split_indices: dict = field(default_factory=dict, repr=False)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "train_mse", "test_mse", "val_mse", "lr", "grad_norm", "accepted"])
            for e in range(self.epochs_run):
                writer.writerow([
                    e + 1,
                    repr(float(self.train_mse[e])),
                    repr(float(self.test_mse[e])),
                    repr(float(self.val_mse[e])),
                    repr(float(self.lr[e])),
                    repr(float(self.grad_norm[e])),
                    int(self.accepted[e]),
                ])

    def summary(self) -> dict:
        return {
            "epochs_run": self.epochs_run,
            "stop_reason": self.stop_reason,
            "best_epoch": self.best_epoch,
            "best_val_mse": float(self.val_mse[self.best_epoch - 1]),
            "final_grad_norm": self.final_grad_norm,
            "snapshot_restored": self.snapshot_restored,
        }


def init_mlp(seed, layer_sizes=LAYER_SIZES) -> MlpNetwork:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _INIT_SALT]))
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpNetwork(tuple(weights), tuple(biases), tuple(layer_sizes))


def _check_inputs(net: MlpNetwork, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.layer_sizes[0]:
        raise ArgumentError(f"network expects {net.layer_sizes[0]} input features, got shape {X.shape}")
    return X


def _activations(net: MlpNetwork, X):
    acts = [X]
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = acts[-1] @ w + b
        acts.append(z if i == last else expit(z))
    return acts


def forward(net: MlpNetwork, X) -> np.ndarray:
    X = _check_inputs(net, X)
    return _activations(net, X)[-1][:, 0]


def gradient(net: MlpNetwork, X, y):
    """Backpropagated gradient of ``mean((y_hat - y)^2)``.

    Returns ``(weight_grads, bias_grads)`` shaped like the network.
    """
    X = _check_inputs(net, X)
    y = np.asarray(y, dtype=np.float64).ravel()
    acts = _activations(net, X)
    delta = (2.0 / X.shape[0]) * (acts[-1][:, 0] - y)[:, None]
    grad_w = [None] * len(net.weights)
    grad_b = [None] * len(net.weights)
    for layer in range(len(net.weights) - 1, -1, -1):
        grad_w[layer] = acts[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer:
            a = acts[layer]
            delta = (delta @ net.weights[layer].T) * a * (1.0 - a)
    return grad_w, grad_b


def _flat_grad(net, X, y):
    gw, gb = gradient(net, X, y)
    return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(gw, gb)])


def _mse(net, X, y):
    if X.shape[0] == 0:
        return float("nan")
    # overflow surfaces as a non-finite loss, which train() reports
    with np.errstate(over="ignore", invalid="ignore"):
        r = forward(net, X) - y
        return float(np.mean(r * r))


def split_indices(m: int, split, seed):
    """Seeded shuffle into train/test/validation index arrays."""
    order = np.random.default_rng(np.random.SeedSequence([int(seed), _SPLIT_SALT])).permutation(m)
    n_train = int(round(split[0] * m))
    n_test = int(round(split[1] * m))
    n_train = min(n_train, m)
    n_test = min(n_test, m - n_train)
    return {
        "train": np.sort(order[:n_train]),
        "test": np.sort(order[n_train:n_train + n_test]),
        "validation": np.sort(order[n_train + n_test:]),
    }


def train(net: MlpNetwork, X, y, config: TrainConfig = TrainConfig()):
    """Fit ``net`` to ``(X, y)``; returns the best-validation network and a report."""
    X = _check_inputs(net, X)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] < 10:
        raise ArgumentError("training needs at least 10 samples")
    parts = split_indices(X.shape[0], config.split, config.seed)
    Xtr, ytr = X[parts["train"]], y[parts["train"]]
    Xte, yte = X[parts["test"]], y[parts["test"]]
    Xva, yva = X[parts["validation"]], y[parts["validation"]]
    if Xtr.shape[0] == 0 or Xva.shape[0] == 0:
        raise ArgumentError("split leaves an empty training or validation subset")

    layer_sizes = net.layer_sizes
    params = net.flat()
    velocity = np.zeros_like(params)
    lr = config.lr0
    current = net
    perf = _mse(current, Xtr, ytr)

    curves = {k: [] for k in ("train", "test", "val", "lr", "grad", "accepted")}
    best_val, best_params, best_epoch = np.inf, params, 0
    fails = 0
    stop_reason = "max_epochs"

    for epoch in range(1, config.max_epochs + 1):
        grad = _flat_grad(current, Xtr, ytr)
        grad_norm = float(np.linalg.norm(grad))
        velocity = config.momentum * velocity - lr * grad
        candidate_params = params + velocity
        if not np.all(np.isfinite(candidate_params)):
            raise NumericError(f"parameters diverged at epoch {epoch} (learning rate {lr:g})")
        candidate = MlpNetwork.from_flat(candidate_params, layer_sizes)
        new_perf = _mse(candidate, Xtr, ytr)
        if not np.isfinite(new_perf):
            raise NumericError(f"training loss is not finite at epoch {epoch} (learning rate {lr:g})")

        accepted = new_perf <= config.max_perf_inc * perf
        if accepted:
            if new_perf < perf:
                lr *= config.lr_inc
            params, current, perf = candidate_params, candidate, new_perf
        else:
            lr *= config.lr_dec
            velocity = np.zeros_like(params)

        val = _mse(current, Xva, yva)
        curves["train"].append(perf)
        curves["test"].append(_mse(current, Xte, yte))
        curves["val"].append(val)
        curves["lr"].append(lr)
        curves["grad"].append(grad_norm)
        curves["accepted"].append(accepted)

        if val < best_val:
            best_val, best_params, best_epoch = val, params, epoch
            fails = 0
        elif accepted:
            # a rejected step leaves the network unchanged; only moves count
            fails += 1

        if perf <= config.goal:
            stop_reason = "performance"
            break
        if grad_norm < config.min_grad:
            stop_reason = "gradient"
            break
        if fails >= config.max_fail:
            stop_reason = "validation"
            break

    epochs_run = len(curves["train"])
    report = TrainReport(
        epochs_run=epochs_run,
        stop_reason=stop_reason,
        train_mse=np.asarray(curves["train"]),
        test_mse=np.asarray(curves["test"]),
        val_mse=np.asarray(curves["val"]),
        lr=np.asarray(curves["lr"]),
        grad_norm=np.asarray(curves["grad"]),
        accepted=np.asarray(curves["accepted"], dtype=bool),
        best_epoch=best_epoch,
        final_grad_norm=float(curves["grad"][-1]),
        snapshot_restored=best_epoch != epochs_run,
        split_indices=parts,
    )
    return MlpNetwork.from_flat(best_params, layer_sizes), report


def predict_map(net: MlpNetwork, features, dims) -> DetectionMap:
    features = np.asarray(features, dtype=np.float64)
    h, w = dims
    if features.shape[0] != h * w:
        raise ArgumentError(f"{features.shape[0]} feature rows for a {h}x{w} map")
    return DetectionMap.from_predictions(forward(net, features), (h, w), "mlp")


def write_error_histogram(net: MlpNetwork, X, y, parts, path) -> None:
    """Per-sample ``output - target`` with the split each sample belongs to."""
    out = forward(net, X)
    tag = np.empty(len(y), dtype=object)
    for name, idx in parts.items():
        tag[idx] = name
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sample", "split", "output", "target", "error"])
        for i in range(len(y)):
            writer.writerow([i, tag[i], repr(float(out[i])), repr(float(y[i])), repr(float(out[i] - y[i]))])


class MLPRegressor(PixelRegressor):
    """Estimator wrapper around :func:`init_mlp` and :func:`train`.

    Every :class:`TrainConfig` field is a constructor parameter; ``seed``
    drives both the initial weights and the train/test/validation split.
    """

    kind = "mlp"

    def __init__(self, lr0=0.01, lr_inc=1.05, lr_dec=0.7, max_perf_inc=1.04, momentum=0.9,
                 max_epochs=1000, goal=0.0, min_grad=1e-5, max_fail=6,
                 split=(0.70, 0.15, 0.15), seed=0):
        self.lr0 = lr0
        self.lr_inc = lr_inc
        self.lr_dec = lr_dec
        self.max_perf_inc = max_perf_inc
        self.momentum = momentum
        self.max_epochs = max_epochs
        self.goal = goal
        self.min_grad = min_grad
        self.max_fail = max_fail
        self.split = split
        self.seed = seed

    def config(self) -> TrainConfig:
        return TrainConfig(**{f.name: getattr(self, f.name) for f in fields(TrainConfig)})

    def _fit(self, X, y):
        config = self.config()
        self.network_, self.report_ = train(init_mlp(self.seed), X, y, config)

    def _predict(self, X):
        return forward(self.network_, X)

    def _state_to_json(self):
        return {"network": self.network_.to_dict()}

    def _state_from_json(self, doc):
        self.network_ = MlpNetwork.from_dict(doc["network"])


def save_network_json(net: MlpNetwork, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=1) + "\n")


def load_network_json(path) -> MlpNetwork:
    return MlpNetwork.from_dict(json.loads(Path(path).read_text()))
