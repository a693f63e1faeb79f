"""Single-hidden-layer feedforward network (rectifier units, softmax output),
trained on L2-regularized cross-entropy."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .config import NonFiniteLoss, TrainConfig
from .features import N_CLASSES
from .mnl import _log_softmax, softmax
from .optim import minimize_adam, minimize_gd_halving


@dataclass
class NeuralModel:
    w1: np.ndarray  # (hidden, n_features)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (3, hidden)
    b2: np.ndarray  # (3,)
    seed: int = 0
    loss_curve: list[float] = field(default_factory=list)

    kind: ClassVar[str] = "nn"

    def predict_proba_matrix(self, X: np.ndarray) -> np.ndarray:
        hidden = np.maximum(X @ self.w1.T + self.b1, 0.0)
        return softmax(hidden @ self.w2.T + self.b2)


def init_params(n_features: int, hidden_units: int, rng: np.random.Generator):
    """Glorot-uniform weights, zero biases."""
    bound1 = np.sqrt(6.0 / (n_features + hidden_units))
    bound2 = np.sqrt(6.0 / (hidden_units + N_CLASSES))
    w1 = rng.uniform(-bound1, bound1, size=(hidden_units, n_features))
    w2 = rng.uniform(-bound2, bound2, size=(N_CLASSES, hidden_units))
    return w1, np.zeros(hidden_units), w2, np.zeros(N_CLASSES)


def loss_and_grad(w1, b1, w2, b2, X, y, l2_strength):
    """Forward/backward pass: mean cross-entropy plus l2/(2N)·(||W1||²+||W2||²)
    with analytic gradients for all four parameter arrays."""
    n = X.shape[0]
    z1 = X @ w1.T + b1
    hidden = np.maximum(z1, 0.0)
    logits = hidden @ w2.T + b2
    log_p = _log_softmax(logits)
    loss = -log_p[np.arange(n), y].mean()
    loss += 0.5 * l2_strength * (np.sum(w1**2) + np.sum(w2**2)) / n

    p = np.exp(log_p)
    p[np.arange(n), y] -= 1.0
    d_logits = p / n
    d_w2 = d_logits.T @ hidden + (l2_strength / n) * w2
    d_b2 = d_logits.sum(axis=0)
    d_hidden = d_logits @ w2
    d_z1 = d_hidden * (z1 > 0)
    d_w1 = d_z1.T @ X + (l2_strength / n) * w1
    d_b1 = d_z1.sum(axis=0)
    return loss, (d_w1, d_b1, d_w2, d_b2)


def _pack(w1, b1, w2, b2):
    return np.concatenate([w1.ravel(), b1, w2.ravel(), b2])


def _unpack(flat, n_features, hidden):
    sizes = [hidden * n_features, hidden, N_CLASSES * hidden, N_CLASSES]
    parts = np.split(flat, np.cumsum(sizes)[:-1])
    return (
        parts[0].reshape(hidden, n_features),
        parts[1],
        parts[2].reshape(N_CLASSES, hidden),
        parts[3],
    )


def fit(X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> NeuralModel:
    n_features = X.shape[1]
    hidden = cfg.hidden_units
    rng = np.random.default_rng(cfg.seed)

    def value_and_grad(flat, idx=None):
        rows = slice(None) if idx is None else idx
        params = _unpack(flat, n_features, hidden)
        loss, grads = loss_and_grad(*params, X[rows], y[rows], cfg.l2_strength)
        return loss, _pack(*grads)

    x0 = _pack(*init_params(n_features, hidden, rng))
    if cfg.optimizer == "gd_halving":
        flat, curve = minimize_gd_halving(
            value_and_grad, x0, cfg.learning_rate, cfg.max_epochs, cfg.tolerance
        )
    else:
        flat, curve = minimize_adam(
            value_and_grad,
            lambda f: value_and_grad(f)[0],
            x0,
            n_samples=X.shape[0],
            batch_size=cfg.batch_size,
            rng=rng,
            learning_rate=cfg.learning_rate,
            max_epochs=cfg.max_epochs,
            tolerance=cfg.tolerance,
        )
    if not np.isfinite(curve[-1]):
        raise NonFiniteLoss(f"final loss is {curve[-1]}")
    w1, b1, w2, b2 = _unpack(flat, n_features, hidden)
    return NeuralModel(w1=w1, b1=b1, w2=w2, b2=b2, seed=cfg.seed, loss_curve=curve)
