"""Model training and the declarative build manifest.

cv_train does what the one-step pipeline verb promises: cross-validate,
compute statistics (threshold tables included), retrain on all data, and
serialize with a version.  The manifest drives the same step for every
target, skipping outputs whose recorded input hash is unchanged, so a
clean rebuild with fixed seeds reproduces every statistic exactly.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import PipelineError
from ..estimators import EstimatorParams, cross_validate, train
from ..features.catalog import load_feature_set
from ..modelstore import ScoringModel, capture_environment, load, parse_version, save
from ..stats import compute_statistics, json_label
from .extract import dataset_to_labeled, extract_features


def resolve_label_keys(mapping, label_set) -> dict:
    """Map CLI-style string keys ("true=0.9") onto actual labels."""
    if mapping is None:
        return None
    by_key = {json_label(label): label for label in label_set}
    resolved = {}
    for key, value in mapping.items():
        if key in by_key:
            resolved[by_key[key]] = float(value)
        elif key in label_set:
            resolved[key] = float(value)
        else:
            raise PipelineError(f"rate/weight names unknown label {key!r}")
    return resolved


def cv_train(
    dataset_path,
    estimator_kind: str,
    feature_set_path,
    model_name: str,
    version: str,
    hyperparameters: dict | None = None,
    label_weights: dict | None = None,
    population_rates: dict | None = None,
    center: bool = False,
    scale: bool = False,
    folds: int = 10,
    seed: int = 0,
    out_path=None,
    inputs_hash: str | None = None,
) -> ScoringModel:
    """Cross-validate, compute statistics, retrain on all data, serialize."""
    parse_version(version)
    dataset = dataset_to_labeled(dataset_path)
    feature_set = load_feature_set(feature_set_path)
    if tuple(feature_set.features) != dataset.feature_names:
        raise PipelineError(
            "dataset feature names do not match the feature set; re-extract"
        )
    params = EstimatorParams(
        estimator_kind=estimator_kind,
        hyperparameters=dict(hyperparameters or {}),
        label_weights=resolve_label_keys(label_weights, dataset.label_set) or {},
        population_rates=resolve_label_keys(population_rates, dataset.label_set),
        center=center,
        scale=scale,
        seed=seed,
    )
    predictions = cross_validate(dataset, params, folds=folds)
    statistics = compute_statistics(predictions, dataset.label_set)
    estimator = train(dataset, params)
    model = ScoringModel(
        context=feature_set.context,
        name=model_name,
        version=version,
        estimator=estimator,
        feature_set=feature_set,
        statistics=statistics,
        environment=capture_environment(),
        inputs_hash=inputs_hash,
    )
    if out_path is not None:
        save(model, out_path)
    return model


@dataclass
class BuildTarget:
    name: str
    labels: Path
    feature_set: Path
    estimator: str
    version: str
    hyperparameters: dict
    label_weights: dict | None
    population_rates: dict | None
    center: bool
    scale: bool
    folds: int
    seed: int
    dataset: Path
    out: Path

    def config_doc(self) -> dict:
        return {
            "estimator": self.estimator,
            "version": self.version,
            "hyperparameters": self.hyperparameters,
            "label_weights": self.label_weights,
            "population_rates": self.population_rates,
            "center": self.center,
            "scale": self.scale,
            "folds": self.folds,
            "seed": self.seed,
        }

    def inputs_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(Path(self.labels).read_bytes())
        digest.update(Path(self.feature_set).read_bytes())
        digest.update(
            json.dumps(self.config_doc(), sort_keys=True, separators=(",", ":")).encode()
        )
        return digest.hexdigest()


def load_manifest(manifest_path):
    """Parse a manifest; relative paths resolve against the manifest file."""
    manifest_path = Path(manifest_path)
    with open(manifest_path, encoding="utf-8") as handle:
        doc = json.load(handle)
    base = manifest_path.parent

    def resolved(p) -> Path:
        path = Path(p)
        return path if path.is_absolute() else base / path

    fixtures = resolved(doc.get("fixtures", "fixtures"))
    datasets_dir = resolved(doc.get("datasets_dir", "datasets"))
    models_dir = resolved(doc.get("models_dir", "models"))
    targets = []
    for entry in doc.get("targets", []):
        try:
            name = entry["name"]
            labels = resolved(entry["labels"])
            feature_set_path = resolved(entry["feature_set"])
            estimator = entry["estimator"]
            version = entry["version"]
        except KeyError as exc:
            raise PipelineError(f"manifest target missing {exc}") from exc
        feature_set = load_feature_set(feature_set_path)
        dataset = (
            resolved(entry["dataset"])
            if "dataset" in entry
            else datasets_dir / f"{labels.stem}.{feature_set.name}.w_features.ndjson"
        )
        out = (
            resolved(entry["out"])
            if "out" in entry
            else models_dir / f"{feature_set.context}.{name}.{estimator}.model"
        )
        targets.append(
            BuildTarget(
                name=name,
                labels=labels,
                feature_set=feature_set_path,
                estimator=estimator,
                version=version,
                hyperparameters=entry.get("hyperparameters", {}),
                label_weights=entry.get("label_weights"),
                population_rates=entry.get("population_rates"),
                center=entry.get("center", False),
                scale=entry.get("scale", False),
                folds=entry.get("folds", 10),
                seed=entry.get("seed", 0),
                dataset=dataset,
                out=out,
            )
        )
    return fixtures, targets


def _up_to_date(target: BuildTarget, inputs_hash: str) -> bool:
    # A deleted intermediate forces a rebuild so that every artifact in the
    # pipeline can always be regenerated from sources.
    if not Path(target.out).exists() or not Path(target.dataset).exists():
        return False
    try:
        existing = load(target.out)
    except Exception:
        return False
    return existing.inputs_hash == inputs_hash


def build_manifest(manifest_path, force: bool = False, log=None):
    """Build stale targets in manifest order; first failure aborts."""
    fixtures, targets = load_manifest(manifest_path)
    summary = []
    for target in targets:
        inputs_hash = target.inputs_hash()
        if not force and _up_to_date(target, inputs_hash):
            summary.append({"name": target.name, "status": "up-to-date",
                            "version": target.version, "out": str(target.out)})
            if log:
                log(f"{target.name}: up-to-date ({target.out})")
            continue
        Path(target.dataset).parent.mkdir(parents=True, exist_ok=True)
        Path(target.out).parent.mkdir(parents=True, exist_ok=True)
        try:
            report = extract_features(
                target.labels, target.feature_set, fixtures, target.dataset
            )
            model = cv_train(
                target.dataset,
                target.estimator,
                target.feature_set,
                target.name,
                target.version,
                hyperparameters=target.hyperparameters,
                label_weights=target.label_weights,
                population_rates=target.population_rates,
                center=target.center,
                scale=target.scale,
                folds=target.folds,
                seed=target.seed,
                out_path=target.out,
                inputs_hash=inputs_hash,
            )
        except Exception as exc:
            raise PipelineError(f"target {target.name!r} failed: {exc}") from exc
        summary.append(
            {
                "name": target.name,
                "status": "built",
                "version": model.version,
                "out": str(target.out),
                "n": model.statistics.n,
                "rows_extracted": report.extracted,
                "rows_reused": report.reused,
            }
        )
        if log:
            log(
                f"{target.name}: built {target.out} "
                f"(n={model.statistics.n}, version={model.version})"
            )
    return summary
