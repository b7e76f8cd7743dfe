"""Multinomial logistic regression trained by full-batch gradient descent.

The analytic gradient here is checked against central finite differences in
the test suite, so loss_and_gradient must stay an exact pair.
"""
from __future__ import annotations

import numpy as np

from ..errors import NonFiniteLoss

DEFAULTS = {"learning_rate": 0.5, "iterations": 2000, "l2": 0.001}


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _with_intercept(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


def loss_and_gradient(W, X, y_idx, n_classes, sample_weight, l2):
    """Weighted cross-entropy with L2 on non-intercept rows.

    ``W`` has shape (d+1, K); row 0 is the intercept and is not penalized.
    Returns (loss, gradient) where the gradient matches ``W``'s shape.
    """
    Xb = _with_intercept(np.asarray(X, dtype=np.float64))
    n = Xb.shape[0]
    w = np.asarray(sample_weight, dtype=np.float64)
    total = w.sum()
    P = _softmax(Xb @ W)
    eps = 1e-300
    nll = -np.sum(w * np.log(P[np.arange(n), y_idx] + eps)) / total
    with np.errstate(over="ignore"):  # divergence surfaces as inf loss
        penalty = 0.5 * l2 * float(np.sum(W[1:] ** 2))
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y_idx] = 1.0
    grad = Xb.T @ ((P - Y) * w[:, None]) / total
    grad[1:] += l2 * W[1:]
    return nll + penalty, grad


class LogisticModel:
    kind = "linear_logistic"

    def __init__(self, learning_rate, iterations, l2):
        self.learning_rate = learning_rate
        self.iterations = iterations
        self.l2 = l2
        self.weights: np.ndarray | None = None
        self.training_loss: list[float] = []

    @classmethod
    def from_hyperparameters(cls, hyperparameters: dict) -> "LogisticModel":
        merged = dict(DEFAULTS)
        merged.update(hyperparameters or {})
        return cls(
            learning_rate=float(merged["learning_rate"]),
            iterations=int(merged["iterations"]),
            l2=float(merged["l2"]),
        )

    def fit(self, X, y_idx, n_classes, sample_weight) -> "LogisticModel":
        X = np.asarray(X, dtype=np.float64)
        W = np.zeros((X.shape[1] + 1, n_classes))
        self.training_loss = []
        for _ in range(self.iterations):
            loss, grad = loss_and_gradient(
                W, X, y_idx, n_classes, sample_weight, self.l2
            )
            if not np.isfinite(loss):
                raise NonFiniteLoss(
                    "training loss diverged; try a lower learning_rate"
                )
            self.training_loss.append(float(loss))
            W -= self.learning_rate * grad
        self.weights = W
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Xb = _with_intercept(np.asarray(X, dtype=np.float64))
        return _softmax(Xb @ self.weights)

    def to_doc(self) -> dict:
        return {
            "kind": self.kind,
            "learning_rate": self.learning_rate,
            "iterations": self.iterations,
            "l2": self.l2,
            "weights": [[float(v) for v in row] for row in self.weights],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "LogisticModel":
        model = cls(doc["learning_rate"], doc["iterations"], doc["l2"])
        model.weights = np.array(doc["weights"], dtype=np.float64)
        return model
