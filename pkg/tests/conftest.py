from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from wikiscore.datasources import FixtureClient
from wikiscore.estimators import EstimatorParams, LabeledDataset, cross_validate, train
from wikiscore.modelstore import ModelRegistry, ScoringModel, capture_environment
from wikiscore.pipeline.build import build_manifest
from wikiscore.pipeline.labels import read_label_file
from wikiscore.features.catalog import feature_set_document, parse_feature_set
from wikiscore.stats import compute_statistics

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES_DIR = REPO_ROOT / "fixtures"
MANIFEST = REPO_ROOT / "manifest.json"
CONTEXT = "testwiki"


def write_tmp_manifest(tmp_dir: Path, manifest_doc: dict | None = None) -> Path:
    """Copy the repo manifest into tmp with absolute fixture paths."""
    if manifest_doc is None:
        manifest_doc = json.loads(MANIFEST.read_text())
    doc = json.loads(json.dumps(manifest_doc))
    doc["fixtures"] = str(FIXTURES_DIR)
    doc["datasets_dir"] = str(tmp_dir / "datasets")
    doc["models_dir"] = str(tmp_dir / "models")
    for target in doc["targets"]:
        for key in ("labels", "feature_set"):
            path = Path(target[key])
            if not path.is_absolute():
                target[key] = str(REPO_ROOT / path)
    manifest_path = tmp_dir / "manifest.json"
    manifest_path.write_text(json.dumps(doc, indent=2))
    return manifest_path


@pytest.fixture(scope="session")
def built_models_dir(tmp_path_factory) -> Path:
    tmp_dir = tmp_path_factory.mktemp("build")
    manifest_path = write_tmp_manifest(tmp_dir)
    build_manifest(manifest_path)
    return tmp_dir / "models"


@pytest.fixture(scope="session")
def registry(built_models_dir) -> ModelRegistry:
    reg = ModelRegistry()
    assert reg.load_directory(built_models_dir) == 3
    return reg


@pytest.fixture()
def client() -> FixtureClient:
    return FixtureClient(FIXTURES_DIR)


@pytest.fixture(scope="session")
def damaging_labels():
    _, records = read_label_file(FIXTURES_DIR / f"{CONTEXT}.damaging.labels.ndjson")
    return records


def tiny_dataset(n: int = 60, seed: int = 3) -> LabeledDataset:
    """Small separable two-class set for fast estimator tests."""
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.normal(loc=(-2.0, -2.0), scale=0.6, size=(half, 2))
    b = rng.normal(loc=(2.0, 2.0), scale=0.6, size=(n - half, 2))
    X = np.vstack([a, b])
    labels = [False] * half + [True] * (n - half)
    return LabeledDataset(X, labels, (False, True), ("x0", "x1"))


def tiny_model(
    name: str = "toy",
    estimator_kind: str = "gradient_boosting",
    version: str = "0.1.0",
    seed: int = 5,
) -> ScoringModel:
    """A fully assembled ScoringModel over two reference features."""
    data = tiny_dataset(seed=seed)
    # Interpret the two columns as reference features so the model can be
    # served against the feature graph if a test wants to.
    doc = feature_set_document(
        CONTEXT, name, ["words_count", "chars_count"], {}
    )
    params = EstimatorParams(
        estimator_kind=estimator_kind,
        hyperparameters={"n_estimators": 10}
        if estimator_kind == "gradient_boosting"
        else {"iterations": 300},
        center=True,
        scale=True,
        seed=seed,
    )
    predictions = cross_validate(data, params, folds=3)
    statistics = compute_statistics(predictions, data.label_set)
    feature_set = parse_feature_set(doc)
    return ScoringModel(
        context=CONTEXT,
        name=name,
        version=version,
        estimator=train(data, params),
        feature_set=feature_set,
        statistics=statistics,
        environment=capture_environment(),
    )
