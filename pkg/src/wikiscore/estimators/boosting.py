"""Gradient boosted shallow trees on the log-odds scale.

Binary problems boost a single score through the logistic link; multiclass
problems boost one score per class through softmax, with Friedman's
(K-1)/K leaf correction.  Training records the per-iteration deviance so
the non-increasing-loss property is checkable after the fact.
"""
from __future__ import annotations

import numpy as np

from ..errors import NonFiniteLoss
from .trees import RegressionTree, resolve_max_features

DEFAULTS = {
    "learning_rate": 0.1,
    "n_estimators": 100,
    "max_depth": 3,
    "max_features": None,
    "min_samples_leaf": 1,
}

_PROB_EPS = 1e-15


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    expz = np.exp(z[~pos])
    out[~pos] = expz / (1.0 + expz)
    return out


def _softmax(F: np.ndarray) -> np.ndarray:
    shifted = F - F.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


class GradientBoostingModel:
    kind = "gradient_boosting"

    def __init__(
        self,
        learning_rate,
        n_estimators,
        max_depth,
        max_features,
        min_samples_leaf,
        seed,
    ):
        self.learning_rate = learning_rate
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.seed = seed
        self.n_classes: int | None = None
        self.base_score = None  # float (binary) or list (multiclass)
        self.stages: list = []
        self.training_loss: list[float] = []

    @classmethod
    def from_hyperparameters(cls, hyperparameters: dict, seed: int = 0):
        merged = dict(DEFAULTS)
        merged.update(hyperparameters or {})
        return cls(
            learning_rate=float(merged["learning_rate"]),
            n_estimators=int(merged["n_estimators"]),
            max_depth=int(merged["max_depth"]),
            max_features=merged["max_features"],
            min_samples_leaf=int(merged["min_samples_leaf"]),
            seed=int(seed),
        )

    def fit(self, X, y_idx, n_classes, sample_weight) -> "GradientBoostingModel":
        X = np.asarray(X, dtype=np.float64)
        w = np.asarray(sample_weight, dtype=np.float64)
        self.n_classes = n_classes
        rng = np.random.default_rng(self.seed)
        m = resolve_max_features(self.max_features, X.shape[1])
        if n_classes == 2:
            self._fit_binary(X, y_idx, w, rng, m)
        else:
            self._fit_multiclass(X, y_idx, n_classes, w, rng, m)
        return self

    def _fit_binary(self, X, y_idx, w, rng, max_features):
        y = (np.asarray(y_idx) == 1).astype(np.float64)
        pos = float(np.sum(w * y))
        neg = float(np.sum(w * (1.0 - y)))
        self.base_score = float(np.log(max(pos, _PROB_EPS) / max(neg, _PROB_EPS)))
        F = np.full(X.shape[0], self.base_score)
        self.training_loss = [self._binary_deviance(y, F, w)]
        self.stages = []
        for _ in range(self.n_estimators):
            p = _sigmoid(F)
            grad = y - p
            curvature = p * (1.0 - p)
            tree = RegressionTree.fit(
                X, grad, curvature, w, rng,
                self.max_depth, self.min_samples_leaf, max_features,
            )
            F = F + self.learning_rate * tree.predict(X)
            loss = self._binary_deviance(y, F, w)
            if not np.isfinite(loss):
                raise NonFiniteLoss("boosting deviance diverged")
            self.training_loss.append(loss)
            self.stages.append(tree)

    def _fit_multiclass(self, X, y_idx, n_classes, w, rng, max_features):
        n = X.shape[0]
        Y = np.zeros((n, n_classes))
        Y[np.arange(n), y_idx] = 1.0
        priors = (w[:, None] * Y).sum(axis=0) / w.sum()
        self.base_score = [float(np.log(max(p, _PROB_EPS))) for p in priors]
        F = np.tile(np.array(self.base_score), (n, 1))
        self.training_loss = [self._multiclass_deviance(Y, F, w)]
        self.stages = []
        factor = (n_classes - 1) / n_classes
        for _ in range(self.n_estimators):
            P = _softmax(F)
            stage = []
            for k in range(n_classes):
                grad = Y[:, k] - P[:, k]
                curvature = np.abs(grad) * (1.0 - np.abs(grad))
                tree = RegressionTree.fit(
                    X, grad, curvature, w, rng,
                    self.max_depth, self.min_samples_leaf, max_features,
                    leaf_factor=factor,
                )
                stage.append(tree)
            for k, tree in enumerate(stage):
                F[:, k] += self.learning_rate * tree.predict(X)
            loss = self._multiclass_deviance(Y, F, w)
            if not np.isfinite(loss):
                raise NonFiniteLoss("boosting deviance diverged")
            self.training_loss.append(loss)
            self.stages.append(stage)

    @staticmethod
    def _binary_deviance(y, F, w) -> float:
        p = np.clip(_sigmoid(F), _PROB_EPS, 1.0 - _PROB_EPS)
        return float(-np.sum(w * (y * np.log(p) + (1 - y) * np.log(1 - p))) / w.sum())

    @staticmethod
    def _multiclass_deviance(Y, F, w) -> float:
        P = np.clip(_softmax(F), _PROB_EPS, 1.0)
        return float(-np.sum(w * np.sum(Y * np.log(P), axis=1)) / w.sum())

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.n_classes == 2:
            F = np.full(X.shape[0], self.base_score)
            for tree in self.stages:
                F += self.learning_rate * tree.predict(X)
            return F
        F = np.tile(np.array(self.base_score), (X.shape[0], 1))
        for stage in self.stages:
            for k, tree in enumerate(stage):
                F[:, k] += self.learning_rate * tree.predict(X)
        return F

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        F = self.decision_scores(X)
        if self.n_classes == 2:
            p = _sigmoid(F)
            return np.column_stack([1.0 - p, p])
        return _softmax(F)

    def to_doc(self) -> dict:
        if self.n_classes == 2:
            stages = [tree.to_doc() for tree in self.stages]
        else:
            stages = [[tree.to_doc() for tree in stage] for stage in self.stages]
        return {
            "kind": self.kind,
            "learning_rate": self.learning_rate,
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "max_features": self.max_features,
            "min_samples_leaf": self.min_samples_leaf,
            "seed": self.seed,
            "n_classes": self.n_classes,
            "base_score": self.base_score,
            "stages": stages,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "GradientBoostingModel":
        model = cls(
            learning_rate=doc["learning_rate"],
            n_estimators=doc["n_estimators"],
            max_depth=doc["max_depth"],
            max_features=doc["max_features"],
            min_samples_leaf=doc["min_samples_leaf"],
            seed=doc["seed"],
        )
        model.n_classes = doc["n_classes"]
        model.base_score = doc["base_score"]
        if model.n_classes == 2:
            model.stages = [RegressionTree.from_doc(t) for t in doc["stages"]]
        else:
            model.stages = [
                [RegressionTree.from_doc(t) for t in stage] for stage in doc["stages"]
            ]
        return model
