"""Training entry points: fit, recalibrate, cross-validate."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import (
    DegenerateData,
    DimensionMismatch,
    InvalidFlag,
    TooFewExamplesPerClass,
    ZeroRate,
)
from .boosting import GradientBoostingModel
from .data import LabeledDataset, Scaler
from .linear import LogisticModel

ESTIMATOR_KINDS = ("linear_logistic", "gradient_boosting")


@dataclass
class EstimatorParams:
    estimator_kind: str
    hyperparameters: dict = field(default_factory=dict)
    label_weights: dict = field(default_factory=dict)
    population_rates: dict | None = None
    center: bool = False
    scale: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.estimator_kind not in ESTIMATOR_KINDS:
            raise InvalidFlag(f"unknown estimator kind: {self.estimator_kind!r}")

    def validate_rates(self, label_set) -> None:
        if self.population_rates is None:
            return
        if set(self.population_rates) != set(label_set):
            raise ZeroRate("population rates must cover the label set exactly")
        total = sum(self.population_rates.values())
        if any(rate <= 0 for rate in self.population_rates.values()):
            raise ZeroRate("population rates must be > 0")
        if abs(total - 1.0) > 1e-9:
            raise ZeroRate(f"population rates sum to {total!r}, not 1")

    def to_doc(self, label_set=None) -> dict:
        doc = {}
        if label_set is not None:
            doc["labels"] = list(label_set)
        doc.update(sorted(self.hyperparameters.items()))
        doc["label_weights"] = {_key(k): v for k, v in self.label_weights.items()}
        doc["population_rates"] = (
            None
            if self.population_rates is None
            else {_key(k): v for k, v in self.population_rates.items()}
        )
        doc["center"] = self.center
        doc["scale"] = self.scale
        doc["seed"] = self.seed
        return doc


def _key(label) -> str:
    if isinstance(label, bool):
        return "true" if label else "false"
    return str(label)


def recalibrate(raw: dict, sample_rates: dict, population_rates: dict) -> dict:
    """Re-weight probabilities from sample priors to population priors.

    Each class probability is multiplied by population_rate/sample_rate and
    the result renormalized.  Identical rates give the identity; 0 and 1
    probabilities are preserved.
    """
    for rates in (sample_rates, population_rates):
        for label in raw:
            rate = rates.get(label)
            if rate is None or rate <= 0:
                raise ZeroRate(f"missing or non-positive rate for {label!r}")
    adjusted = {
        label: probability * (population_rates[label] / sample_rates[label])
        for label, probability in raw.items()
    }
    total = sum(adjusted.values())
    if total <= 0:
        raise ZeroRate("all adjusted probabilities are zero")
    return {label: value / total for label, value in adjusted.items()}


class Estimator:
    """A trained classifier plus its scaler and probability calibration."""

    def __init__(self, core, label_set, params, scaler, sample_rates):
        self.core = core
        self.label_set = tuple(label_set)
        self.params = params
        self.scaler = scaler
        self.sample_rates = sample_rates

    @property
    def kind(self) -> str:
        return self.core.kind

    def predict_proba(self, features) -> dict:
        """Class probabilities for one feature vector, recalibrated."""
        return self.predict_proba_many([features])[0]

    def predict_proba_many(self, matrix) -> list[dict]:
        X = np.asarray(matrix, dtype=np.float64)
        d = len(self.scaler.means)
        if X.ndim != 2 or X.shape[1] != d:
            raise DimensionMismatch(
                f"expected {d} features, got shape {X.shape}"
            )
        X = self.scaler.transform(X)
        P = self.core.predict_proba(X)
        out = []
        for row in P:
            raw = {label: float(p) for label, p in zip(self.label_set, row)}
            if self.params.population_rates is not None:
                raw = recalibrate(raw, self.sample_rates, self.params.population_rates)
            out.append(raw)
        return out

    def training_loss(self) -> list[float]:
        return list(self.core.training_loss)

    def to_doc(self) -> dict:
        return {
            "core": self.core.to_doc(),
            "label_set": list(self.label_set),
            "params": {
                "estimator_kind": self.params.estimator_kind,
                "hyperparameters": self.params.hyperparameters,
                "label_weights": {_key(k): v for k, v in self.params.label_weights.items()},
                "population_rates": None
                if self.params.population_rates is None
                else {_key(k): v for k, v in self.params.population_rates.items()},
                "center": self.params.center,
                "scale": self.params.scale,
                "seed": self.params.seed,
            },
            "scaler": None if self.scaler is None else self.scaler.to_doc(),
            "sample_rates": {_key(k): v for k, v in self.sample_rates.items()},
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Estimator":
        label_set = tuple(doc["label_set"])
        rate_keys = {_key(label): label for label in label_set}

        def rates_from(mapping):
            if mapping is None:
                return None
            return {rate_keys[k]: v for k, v in mapping.items()}

        params_doc = doc["params"]
        params = EstimatorParams(
            estimator_kind=params_doc["estimator_kind"],
            hyperparameters=params_doc["hyperparameters"],
            label_weights=rates_from(params_doc["label_weights"]) or {},
            population_rates=rates_from(params_doc["population_rates"]),
            center=params_doc["center"],
            scale=params_doc["scale"],
            seed=params_doc["seed"],
        )
        core_doc = doc["core"]
        if core_doc["kind"] == "linear_logistic":
            core = LogisticModel.from_doc(core_doc)
        else:
            core = GradientBoostingModel.from_doc(core_doc)
        scaler = None if doc["scaler"] is None else Scaler.from_doc(doc["scaler"])
        return cls(core, label_set, params, scaler, rates_from(doc["sample_rates"]))


def _sample_weights(data: LabeledDataset, label_weights: dict) -> np.ndarray:
    return np.array(
        [float(label_weights.get(label, 1.0)) for label in data.labels],
        dtype=np.float64,
    )


def _sample_rates(data: LabeledDataset) -> dict:
    counts = data.class_counts()
    return {label: counts[label] / data.n for label in data.label_set}


def train(data: LabeledDataset, params: EstimatorParams) -> Estimator:
    """Fit an estimator; deterministic given the seed."""
    if len(set(data.labels)) < 2:
        raise DegenerateData("training data contains a single class")
    params.validate_rates(data.label_set)
    X = data.feature_matrix
    # A pass-through scaler still records dimensionality for input checks.
    scaler = Scaler(center=params.center, scale=params.scale).fit(X)
    X = scaler.transform(X)
    y_idx = data.label_indices()
    weights = _sample_weights(data, params.label_weights)
    if params.estimator_kind == "linear_logistic":
        core = LogisticModel.from_hyperparameters(params.hyperparameters)
    else:
        core = GradientBoostingModel.from_hyperparameters(
            params.hyperparameters, seed=params.seed
        )
    core.fit(X, y_idx, len(data.label_set), weights)
    return Estimator(core, data.label_set, params, scaler, _sample_rates(data))


def stratified_folds(labels, label_set, folds: int, seed: int) -> list[int]:
    """Assign each example a fold id, stratified per class."""
    rng = np.random.default_rng(seed)
    assignment = [0] * len(labels)
    for label in label_set:
        indices = [i for i, l in enumerate(labels) if l == label]
        if len(indices) < folds:
            raise TooFewExamplesPerClass(
                f"class {label!r} has {len(indices)} examples for {folds} folds"
            )
        rng.shuffle(indices)
        for position, example in enumerate(indices):
            assignment[example] = position % folds
    return assignment


def cross_validate(data: LabeledDataset, params: EstimatorParams, folds: int = 10):
    """Score every example once with a model not trained on it.

    Returns a list aligned with the dataset: (probability map, true label).
    """
    if folds < 2:
        raise InvalidFlag("folds must be >= 2")
    if len(set(data.labels)) < 2:
        raise DegenerateData("cross-validation data contains a single class")
    assignment = stratified_folds(data.labels, data.label_set, folds, params.seed)
    results: list = [None] * data.n
    for fold in range(folds):
        test_idx = [i for i, f in enumerate(assignment) if f == fold]
        train_idx = [i for i, f in enumerate(assignment) if f != fold]
        subset = LabeledDataset(
            data.feature_matrix[train_idx],
            [data.labels[i] for i in train_idx],
            data.label_set,
            data.feature_names,
        )
        model = train(subset, params)
        scored = model.predict_proba_many(data.feature_matrix[test_idx])
        for i, probabilities in zip(test_idx, scored):
            results[i] = (probabilities, data.labels[i])
    return results
