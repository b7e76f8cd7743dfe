"""Shallow regression trees used as boosting base learners.

Splits minimize weighted squared error on the gradient targets; leaf values
are a Newton step computed from gradient and curvature sums, which is what
turns a regression tree into one boosting stage on the log-odds scale.
"""
from __future__ import annotations

import numpy as np

# Leaves never need pushes this large; the clip only guards degenerate
# curvature sums on nearly-pure nodes.
_MAX_LEAF_VALUE = 15.0
_MIN_CURVATURE = 1e-12
_MIN_GAIN = 1e-12


def resolve_max_features(spec, d: int) -> int | None:
    """Translate a max_features setting into a feature count.

    ``"log2"`` means: consider ceil(log2(d)) randomly chosen features at
    each split.
    """
    if spec is None:
        return None
    if spec == "log2":
        return max(1, int(np.ceil(np.log2(d))))
    count = int(spec)
    if count < 1:
        raise ValueError(f"max_features must be >= 1, got {spec!r}")
    return min(count, d)


def _leaf_value(grad, curvature, weights, factor: float) -> float:
    numerator = float(np.sum(weights * grad))
    denominator = float(np.sum(weights * curvature))
    if denominator < _MIN_CURVATURE:
        denominator = _MIN_CURVATURE
    value = factor * numerator / denominator
    return float(np.clip(value, -_MAX_LEAF_VALUE, _MAX_LEAF_VALUE))


def _best_split(X, grad, weights, feature_indices, min_samples_leaf):
    """Return (gain, feature, threshold) for the best split, or None."""
    best = None
    w_total = weights.sum()
    g_total = float(np.sum(weights * grad))
    sse_parent = float(np.sum(weights * grad * grad)) - g_total * g_total / w_total
    for j in feature_indices:
        order = np.argsort(X[:, j], kind="stable")
        x = X[order, j]
        g = grad[order]
        w = weights[order]
        cw = np.cumsum(w)
        cwg = np.cumsum(w * g)
        cwgg = np.cumsum(w * g * g)
        # Split after position i puts i+1 rows on the left.
        n = len(x)
        valid = np.nonzero(x[:-1] < x[1:])[0]
        if min_samples_leaf > 1:
            valid = valid[
                (valid + 1 >= min_samples_leaf) & (n - valid - 1 >= min_samples_leaf)
            ]
        if len(valid) == 0:
            continue
        wl = cw[valid]
        gl = cwg[valid]
        ggl = cwgg[valid]
        wr = w_total - wl
        gr = g_total - gl
        ggr = cwgg[-1] - ggl
        sse = (ggl - gl * gl / wl) + (ggr - gr * gr / wr)
        gains = sse_parent - sse
        k = int(np.argmax(gains))
        gain = float(gains[k])
        if gain > _MIN_GAIN and (best is None or gain > best[0]):
            i = valid[k]
            threshold = (x[i] + x[i + 1]) / 2.0
            best = (gain, int(j), float(threshold))
    return best


def _build(X, grad, curvature, weights, depth, rng, params):
    if depth < params["max_depth"] and len(grad) >= 2 * params["min_samples_leaf"]:
        d = X.shape[1]
        if params["max_features"] is None:
            feature_indices = range(d)
        else:
            feature_indices = np.sort(
                rng.choice(d, size=params["max_features"], replace=False)
            )
        split = _best_split(X, grad, weights, feature_indices, params["min_samples_leaf"])
        if split is not None:
            _, feature, threshold = split
            mask = X[:, feature] < threshold
            return {
                "feature": feature,
                "threshold": threshold,
                "left": _build(
                    X[mask], grad[mask], curvature[mask], weights[mask],
                    depth + 1, rng, params,
                ),
                "right": _build(
                    X[~mask], grad[~mask], curvature[~mask], weights[~mask],
                    depth + 1, rng, params,
                ),
            }
    return {"value": _leaf_value(grad, curvature, weights, params["leaf_factor"])}


class RegressionTree:
    """One fitted tree; serializes to a nested dict."""

    def __init__(self, root: dict):
        self.root = root

    @classmethod
    def fit(
        cls,
        X,
        grad,
        curvature,
        weights,
        rng,
        max_depth: int,
        min_samples_leaf: int,
        max_features: int | None,
        leaf_factor: float = 1.0,
    ) -> "RegressionTree":
        params = {
            "max_depth": max_depth,
            "min_samples_leaf": min_samples_leaf,
            "max_features": max_features,
            "leaf_factor": leaf_factor,
        }
        root = _build(
            np.asarray(X, dtype=np.float64),
            np.asarray(grad, dtype=np.float64),
            np.asarray(curvature, dtype=np.float64),
            np.asarray(weights, dtype=np.float64),
            0,
            rng,
            params,
        )
        return cls(root)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape[0], dtype=np.float64)

        def descend(node, indices):
            if "value" in node:
                out[indices] = node["value"]
                return
            mask = X[indices, node["feature"]] < node["threshold"]
            descend(node["left"], indices[mask])
            descend(node["right"], indices[~mask])

        descend(self.root, np.arange(X.shape[0]))
        return out

    def feature_indices(self) -> set[int]:
        found = set()

        def walk(node):
            if "feature" in node:
                found.add(node["feature"])
                walk(node["left"])
                walk(node["right"])

        walk(self.root)
        return found

    def to_doc(self) -> dict:
        return self.root

    @classmethod
    def from_doc(cls, doc: dict) -> "RegressionTree":
        return cls(doc)
