"""Feed-forward network mapping decomposition features to damage coordinates.

Three tanh hidden layers of 150 units, linear output.  Training is
deterministic full-batch gradient descent on the MSE of standardized targets,
with step halving whenever a step would increase the loss (so the loss is
non-increasing by construction).  Gradients come from plain backpropagation
and are unit-tested against central finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .features import Standardizer, fit_standardizer

__all__ = [
    "NNModel",
    "TrainConfig",
    "EvalReport",
    "nn_forward",
    "nn_train",
    "nn_evaluate",
    "loss_and_gradients",
    "save_model",
    "load_model",
]

HIDDEN_DIMS = (150, 150, 150)
_MIN_LEARNING_RATE = 1e-14


@dataclass
class TrainConfig:
    max_epochs: int = 3000
    learning_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class NNModel:
    layer_dims: list
    weights: list
    biases: list
    x_scaler: Standardizer
    y_scaler: Standardizer

    def __post_init__(self):
        for w in self.weights:
            if not np.all(np.isfinite(w)):
                raise ValueError("model weights contain non-finite values")
        for b in self.biases:
            if not np.all(np.isfinite(b)):
                raise ValueError("model biases contain non-finite values")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]


@dataclass
class EvalReport:
    x_error_pct: float
    y_error_pct: float
    predictions: list = field(default_factory=list)


def _init_params(layer_dims, seed):
    """Symmetric uniform weights scaled by fan-in, zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _forward_std(weights, biases, x_std):
    """Activations of every layer; tanh hidden layers, linear output."""
    activations = [x_std]
    a = x_std
    for w, b in zip(weights[:-1], biases[:-1]):
        a = np.tanh(a @ w + b)
        activations.append(a)
    activations.append(a @ weights[-1] + biases[-1])
    return activations


def _loss_and_grads(weights, biases, x_std, y_std):
    """MSE over all outputs plus backpropagated parameter gradients."""
    acts = _forward_std(weights, biases, x_std)
    diff = acts[-1] - y_std
    loss = float(np.mean(diff**2))
    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    delta = 2.0 * diff / diff.size
    for layer in range(len(weights) - 1, -1, -1):
        grad_w[layer] = acts[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (1.0 - acts[layer] ** 2)
    return loss, grad_w, grad_b


def loss_and_gradients(model: NNModel, features: np.ndarray, targets: np.ndarray):
    """Loss and gradients at the model's parameters, in standardized space."""
    x_std = model.x_scaler.apply(features)
    y_std = model.y_scaler.apply(targets)
    return _loss_and_grads(model.weights, model.biases, x_std, y_std)


def nn_forward(model: NNModel, features: np.ndarray):
    """Predicted (x_m, y_m) for one feature vector."""
    features = np.asarray(features, dtype=float).reshape(1, -1)
    if features.shape[1] != model.input_dim:
        raise ValueError(
            f"feature vector has {features.shape[1]} values, model expects {model.input_dim}"
        )
    pred = _predict(model, features)[0]
    return float(pred[0]), float(pred[1])


def _predict(model: NNModel, features: np.ndarray) -> np.ndarray:
    x_std = model.x_scaler.apply(features)
    out_std = _forward_std(model.weights, model.biases, x_std)[-1]
    return model.y_scaler.invert(out_std)


def nn_train(features: np.ndarray, targets: np.ndarray,
             config: TrainConfig | None = None,
             hidden_dims=HIDDEN_DIMS) -> NNModel:
    """Train on (features, targets) rows; returns a self-contained model.

    Inputs and targets are standardized internally (the constants ride along
    in the model).  A step that would raise the loss is retried with a halved
    rate, so the recorded loss never increases.
    """
    if config is None:
        config = TrainConfig()
    features = np.atleast_2d(np.asarray(features, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if features.shape[0] != targets.shape[0]:
        raise ValueError("features and targets must have the same number of rows")
    if features.shape[0] < 1:
        raise ValueError("need at least one training sample")

    x_scaler = fit_standardizer(features)
    y_scaler = fit_standardizer(targets)
    x_std = x_scaler.apply(features)
    y_std = y_scaler.apply(targets)

    layer_dims = [features.shape[1], *hidden_dims, targets.shape[1]]
    weights, biases = _init_params(layer_dims, config.seed)

    loss, grad_w, grad_b = _loss_and_grads(weights, biases, x_std, y_std)
    if not np.isfinite(loss):
        raise ValueError("training diverged (non-finite loss); reduce learning_rate")
    initial_loss = loss
    lr = config.learning_rate
    for _ in range(config.max_epochs):
        if loss <= 1e-16:
            break
        while lr > _MIN_LEARNING_RATE:
            cand_w = [w - lr * g for w, g in zip(weights, grad_w)]
            cand_b = [b - lr * g for b, g in zip(biases, grad_b)]
            cand_loss, cand_gw, cand_gb = _loss_and_grads(cand_w, cand_b, x_std, y_std)
            if np.isfinite(cand_loss) and cand_loss <= loss:
                weights, biases = cand_w, cand_b
                loss, grad_w, grad_b = cand_loss, cand_gw, cand_gb
                lr *= 1.2
                break
            lr *= 0.5
        else:
            break  # no usable step left at any rate
    if not np.isfinite(loss):
        raise ValueError("training diverged (non-finite loss); reduce learning_rate")
    if loss > initial_loss:
        raise ValueError("training failed to reduce the loss; reduce learning_rate")
    return NNModel(layer_dims, weights, biases, x_scaler, y_scaler)


def nn_evaluate(model: NNModel, features: np.ndarray, targets: np.ndarray,
                labels=None, coord_ranges=None) -> EvalReport:
    """Relative per-coordinate errors: 100 * mean|pred - true| / range.

    ``coord_ranges`` (x_range_m, y_range_m) defaults to the span of the given
    targets per coordinate.
    """
    features = np.atleast_2d(np.asarray(features, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    preds = _predict(model, features)
    abs_err = np.abs(preds - targets)
    if coord_ranges is None:
        coord_ranges = targets.max(axis=0) - targets.min(axis=0)
    coord_ranges = np.where(np.asarray(coord_ranges, dtype=float) > 0, coord_ranges, 1.0)
    rel = 100.0 * abs_err.mean(axis=0) / coord_ranges
    if labels is None:
        labels = [str(i) for i in range(len(targets))]
    rows = [
        {
            "label": label,
            "true_x_m": float(t[0]),
            "true_y_m": float(t[1]),
            "pred_x_m": float(p[0]),
            "pred_y_m": float(p[1]),
        }
        for label, t, p in zip(labels, targets, preds)
    ]
    return EvalReport(float(rel[0]), float(rel[1]), rows)


def save_model(path, model: NNModel) -> None:
    """JSON with layer dims, row-major parameter arrays, scaler constants."""
    payload = {
        "layer_dims": list(model.layer_dims),
        "weights": [w.tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "x_mean": model.x_scaler.mean.tolist(),
        "x_std": model.x_scaler.std.tolist(),
        "x_zero_variance": model.x_scaler.zero_variance.tolist(),
        "y_mean": model.y_scaler.mean.tolist(),
        "y_std": model.y_scaler.std.tolist(),
        "y_zero_variance": model.y_scaler.zero_variance.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> NNModel:
    with open(path) as fh:
        payload = json.load(fh)
    x_scaler = Standardizer(
        np.asarray(payload["x_mean"]), np.asarray(payload["x_std"]),
        np.asarray(payload["x_zero_variance"], dtype=bool),
    )
    y_scaler = Standardizer(
        np.asarray(payload["y_mean"]), np.asarray(payload["y_std"]),
        np.asarray(payload["y_zero_variance"], dtype=bool),
    )
    return NNModel(
        payload["layer_dims"],
        [np.asarray(w) for w in payload["weights"]],
        [np.asarray(b) for b in payload["biases"]],
        x_scaler, y_scaler,
    )
