"""Multilayer perceptron for count regression, trained by minibatch SGD.

Hidden layers apply ReLU; the output layer is identity so the network can
emit unbounded real counts. Two stock architectures are exposed: a wide
net with a single hidden layer and a deep net with three.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, TrainingDivergedError
from ..features import FeatureMatrix
from .config import TrainConfig

ARCH_WNN = "wnn"
ARCH_DNN = "dnn"
ARCH_CUSTOM = "custom"


@dataclass(slots=True)
class MlpModel:
    weights: list[np.ndarray]  # each (n_in, n_out)
    biases: list[np.ndarray]  # each (n_out,)
    arch: str
    seed: int
    columns: tuple[str, ...] | None = None

    @property
    def input_dim(self) -> int:
        return int(self.weights[0].shape[0])

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return tuple(int(w.shape[1]) for w in self.weights[:-1])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return mlp_forward(self, X)

    def clone(self) -> "MlpModel":
        return MlpModel(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            arch=self.arch,
            seed=self.seed,
            columns=self.columns,
        )

    def check_shapes(self) -> None:
        for k in range(1, len(self.weights)):
            if self.weights[k].shape[0] != self.weights[k - 1].shape[1]:
                raise ValueError(f"layer {k} input dim does not chain from layer {k - 1}")
        if self.weights[-1].shape[1] != 1:
            raise ValueError("output layer must have exactly one unit")

    def to_dict(self) -> dict:
        return {
            "arch": self.arch,
            "seed": self.seed,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, data: dict, columns=None) -> "MlpModel":
        model = cls(
            weights=[np.array(w, dtype=np.float64) for w in data["weights"]],
            biases=[np.array(b, dtype=np.float64) for b in data["biases"]],
            arch=str(data["arch"]),
            seed=int(data["seed"]),
            columns=columns,
        )
        model.check_shapes()
        return model


def _resolve_widths(
    arch: str, cfg: TrainConfig, hidden_widths: tuple[int, ...] | None
) -> tuple[int, ...]:
    if hidden_widths is not None:
        widths = tuple(int(w) for w in hidden_widths)
    elif arch == ARCH_WNN:
        widths = cfg.wnn_hidden
    elif arch == ARCH_DNN:
        widths = cfg.dnn_hidden
    else:
        raise ConfigError(f"arch {arch!r} needs explicit hidden_widths")
    if len(widths) == 0 or any(w < 1 for w in widths):
        raise ConfigError("hidden widths must be a non-empty tuple of positive ints")
    return widths


def mlp_init(
    arch: str,
    input_dim: int,
    seed: int,
    *,
    cfg: TrainConfig | None = None,
    hidden_widths: tuple[int, ...] | None = None,
    columns: tuple[str, ...] | None = None,
) -> MlpModel:
    """Seeded initialization: N(0,1)/sqrt(fan_in) weights, zero biases."""
    if input_dim < 1:
        raise ConfigError("input_dim must be >= 1")
    if arch not in (ARCH_WNN, ARCH_DNN, ARCH_CUSTOM):
        raise ConfigError(f"unknown architecture {arch!r}")
    cfg = cfg or TrainConfig(seed=seed)
    widths = _resolve_widths(arch, cfg, hidden_widths)
    rng = np.random.default_rng(seed)
    dims = (input_dim, *widths, 1)
    weights, biases = [], []
    for n_in, n_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.standard_normal((n_in, n_out)) / np.sqrt(n_in))
        biases.append(np.zeros(n_out, dtype=np.float64))
    return MlpModel(weights=weights, biases=biases, arch=arch, seed=seed, columns=columns)


def _forward_cached(model: MlpModel, X: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Forward pass keeping every pre-activation (z) and activation (a)."""
    a = X
    zs: list[np.ndarray] = []
    activations: list[np.ndarray] = [a]
    last = len(model.weights) - 1
    # Tolerate overflow to inf: training checks the loss for finiteness and
    # raises a domain error, which beats a warning mid-divergence.
    with np.errstate(over="ignore", invalid="ignore"):
        for k, (W, b) in enumerate(zip(model.weights, model.biases)):
            z = a @ W + b
            zs.append(z)
            a = z if k == last else np.maximum(z, 0.0)
            activations.append(a)
    return zs, activations


def mlp_forward(model: MlpModel, x: np.ndarray) -> np.ndarray | float:
    """Predict for a single feature vector or a batch (rows = samples)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.shape[1] != model.input_dim:
        raise ValueError(
            f"expected {model.input_dim} features, got {X.shape[1]}"
        )
    _, activations = _forward_cached(model, X)
    out = activations[-1][:, 0]
    return float(out[0]) if single else out


def loss_and_grads(
    model: MlpModel, X: np.ndarray, y: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """MSE loss over the batch and its exact gradients by backpropagation.

    Loss = mean((pred - y)^2). ReLU uses the z > 0 subgradient at the kink.
    Returned gradient lists are ordered like model.weights / model.biases.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1, 1)
    n = X.shape[0]
    zs, activations = _forward_cached(model, X)
    pred = activations[-1]
    diff = pred - y
    loss = float((diff * diff).mean())

    grad_w: list[np.ndarray] = [np.empty(0)] * len(model.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(model.biases)
    # Overflow here is possible while diverging; the caller checks the loss
    # for finiteness, so let the arithmetic proceed quietly.
    with np.errstate(over="ignore", invalid="ignore"):
        delta = 2.0 * diff / n  # dL/dz for the identity output layer
        for k in range(len(model.weights) - 1, -1, -1):
            grad_w[k] = activations[k].T @ delta
            grad_b[k] = delta.sum(axis=0)
            if k > 0:
                delta = (delta @ model.weights[k].T) * (zs[k - 1] > 0.0)
    return loss, grad_w, grad_b


@dataclass(slots=True)
class TrainHistory:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    best_epoch: int = 0

    def __len__(self) -> int:
        return len(self.train_mse)


def _dataset_mse(model: MlpModel, X: np.ndarray, y: np.ndarray) -> float:
    diff = mlp_forward(model, X) - y
    return float((diff * diff).mean())


def mlp_train(
    model: MlpModel,
    train: FeatureMatrix,
    val: FeatureMatrix,
    cfg: TrainConfig,
) -> tuple[MlpModel, TrainHistory]:
    """Minibatch SGD on MSE with seeded batch order.

    Records train/val MSE once per epoch (after that epoch's updates) and
    returns the parameter snapshot from the epoch with the lowest validation
    MSE — selection after the fact, not early stopping, so the history
    always spans exactly cfg.epochs entries.
    """
    model = model.clone()
    model.check_shapes()
    if model.columns is None:
        model.columns = tuple(train.column_names)
    X_tr = np.asarray(train.rows, dtype=np.float64)
    y_tr = np.asarray(train.target, dtype=np.float64)
    X_val = np.asarray(val.rows, dtype=np.float64)
    y_val = np.asarray(val.target, dtype=np.float64)
    if X_tr.shape[1] != model.input_dim:
        raise ValueError(
            f"train matrix has {X_tr.shape[1]} features, model expects {model.input_dim}"
        )
    rng = np.random.default_rng(cfg.seed)
    history = TrainHistory()
    best = model.clone()
    best_val = np.inf
    n = X_tr.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            loss, grad_w, grad_b = loss_and_grads(model, X_tr[batch], y_tr[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}; lower the learning rate "
                    f"(currently {cfg.learning_rate})"
                )
            for k in range(len(model.weights)):
                model.weights[k] -= cfg.learning_rate * grad_w[k]
                model.biases[k] -= cfg.learning_rate * grad_b[k]
        train_mse = _dataset_mse(model, X_tr, y_tr)
        val_mse = _dataset_mse(model, X_val, y_val)
        if not np.isfinite(train_mse) or not np.isfinite(val_mse):
            raise TrainingDivergedError(
                f"non-finite epoch MSE at epoch {epoch}; lower the learning rate"
            )
        history.train_mse.append(train_mse)
        history.val_mse.append(val_mse)
        if val_mse < best_val:
            best_val = val_mse
            best = model.clone()
            history.best_epoch = epoch
    return best, history
