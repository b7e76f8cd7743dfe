"""Training data containers and feature standardization."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateData, DimensionMismatch


@dataclass
class LabeledDataset:
    """Feature matrix plus class labels over an ordered label set."""

    feature_matrix: np.ndarray
    labels: list
    label_set: tuple
    feature_names: tuple[str, ...]

    def __post_init__(self):
        self.feature_matrix = np.asarray(self.feature_matrix, dtype=np.float64)
        self.labels = list(self.labels)
        self.label_set = tuple(self.label_set)
        self.feature_names = tuple(self.feature_names)
        n, d = self.feature_matrix.shape
        if n != len(self.labels):
            raise DimensionMismatch(
                f"{n} feature rows but {len(self.labels)} labels"
            )
        if d != len(self.feature_names):
            raise DimensionMismatch(
                f"{d} columns but {len(self.feature_names)} feature names"
            )
        if n < 2:
            raise DegenerateData("need at least 2 examples")
        if not np.all(np.isfinite(self.feature_matrix)):
            raise DegenerateData("feature matrix contains non-finite values")
        known = set(self.label_set)
        for label in self.labels:
            if label not in known:
                raise DegenerateData(f"label {label!r} not in label set")

    @property
    def n(self) -> int:
        return self.feature_matrix.shape[0]

    @property
    def d(self) -> int:
        return self.feature_matrix.shape[1]

    def label_indices(self) -> np.ndarray:
        lookup = {label: i for i, label in enumerate(self.label_set)}
        return np.array([lookup[label] for label in self.labels], dtype=np.intp)

    def class_counts(self) -> dict:
        counts = {label: 0 for label in self.label_set}
        for label in self.labels:
            counts[label] += 1
        return counts


@dataclass
class Scaler:
    """Column centering/scaling fitted on training data.

    Uses the population standard deviation (divide by n); zero deviations
    are replaced by 1 so constant columns pass through unchanged.
    """

    means: np.ndarray = field(default=None)
    stds: np.ndarray = field(default=None)
    center: bool = True
    scale: bool = True

    def fit(self, matrix: np.ndarray) -> "Scaler":
        matrix = np.asarray(matrix, dtype=np.float64)
        self.means = matrix.mean(axis=0)
        stds = matrix.std(axis=0)
        stds[stds == 0.0] = 1.0
        self.stds = stds
        return self

    def transform(self, matrix: np.ndarray) -> np.ndarray:
        out = np.asarray(matrix, dtype=np.float64)
        if self.center:
            out = out - self.means
        if self.scale:
            out = out / self.stds
        return out

    def inverse_transform(self, matrix: np.ndarray) -> np.ndarray:
        out = np.asarray(matrix, dtype=np.float64)
        if self.scale:
            out = out * self.stds
        if self.center:
            out = out + self.means
        return out

    def to_doc(self) -> dict:
        return {
            "means": [float(v) for v in self.means],
            "stds": [float(v) for v in self.stds],
            "center": self.center,
            "scale": self.scale,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Scaler":
        scaler = cls(center=doc["center"], scale=doc["scale"])
        scaler.means = np.array(doc["means"], dtype=np.float64)
        scaler.stds = np.array(doc["stds"], dtype=np.float64)
        return scaler
