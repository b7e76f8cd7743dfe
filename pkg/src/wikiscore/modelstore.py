"""Versioned model files and the in-process model registry.

A model file is a single JSON container: a format-version tag, a checksum
over the canonically serialized payload, and the payload itself (estimator
weights, scaler, feature set with lexicons, params echo, environment, and
fitness statistics).  Serialization is deterministic, so identical training
inputs and seeds produce byte-identical files.
"""
from __future__ import annotations

import hashlib
import json
import os
import platform
import re
import threading
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import (
    CorruptModelFile,
    IncompatibleFormatVersion,
    ModelNotFound,
    UnknownFieldPath,
)
from .estimators import Estimator
from .features.catalog import FeatureSet, parse_feature_set
from .stats import Statistics, ThresholdTable, statistics_from_doc
from .thresholds import optimize, parse

MODEL_FILE_FORMAT_VERSION = 1

_SEMVER_RE = re.compile(r"^(\d+)\.(\d+)\.(\d+)$")

KIND_NAMES = {
    "gradient_boosting": "GradientBoosting",
    "linear_logistic": "LogisticRegression",
}


def parse_version(version: str) -> tuple[int, int, int]:
    match = _SEMVER_RE.match(version)
    if match is None:
        raise ValueError(f"not a MAJOR.MINOR.PATCH version: {version!r}")
    return tuple(int(part) for part in match.groups())


def capture_environment() -> dict:
    return {
        "machine": platform.machine(),
        "os": platform.system(),
        "runtime": f"python {platform.python_version()}",
    }


@dataclass(frozen=True)
class ScoringModel:
    """A trained estimator plus everything needed to serve it."""

    context: str
    name: str
    version: str
    estimator: Estimator
    feature_set: FeatureSet
    statistics: Statistics
    environment: dict
    inputs_hash: str | None = None

    def __post_init__(self):
        parse_version(self.version)

    @property
    def features(self) -> tuple[str, ...]:
        return self.feature_set.features

    @property
    def label_set(self) -> tuple:
        return self.estimator.label_set

    def build_graph(self):
        return self.feature_set.build_graph()

    def info(self) -> dict:
        """Self-description document: type, version, environment, params, statistics."""
        return {
            "type": KIND_NAMES[self.estimator.kind],
            "version": self.version,
            "environment": dict(self.environment),
            "params": self.estimator.params.to_doc(self.label_set),
            "statistics": self.statistics.to_doc(),
        }

    def to_payload(self) -> dict:
        return {
            "context": self.context,
            "name": self.name,
            "version": self.version,
            "estimator": self.estimator.to_doc(),
            "feature_set": self.feature_set.document,
            "statistics": self.statistics.to_doc(),
            "environment": dict(self.environment),
            "inputs_hash": self.inputs_hash,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ScoringModel":
        estimator = Estimator.from_doc(payload["estimator"])
        return cls(
            context=payload["context"],
            name=payload["name"],
            version=payload["version"],
            estimator=estimator,
            feature_set=parse_feature_set(payload["feature_set"]),
            statistics=statistics_from_doc(
                payload["statistics"], estimator.label_set
            ),
            environment=payload["environment"],
            inputs_hash=payload.get("inputs_hash"),
        )


def _canonical_bytes(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save(model: ScoringModel, path) -> None:
    payload = model.to_payload()
    container = {
        "format_version": MODEL_FILE_FORMAT_VERSION,
        "checksum": hashlib.sha256(_canonical_bytes(payload)).hexdigest(),
        "payload": payload,
    }
    tmp_path = f"{path}.tmp"
    with open(tmp_path, "w", encoding="utf-8") as handle:
        json.dump(container, handle, sort_keys=True, separators=(",", ":"))
        handle.write("\n")
    os.replace(tmp_path, path)


def load(path) -> ScoringModel:
    try:
        with open(path, encoding="utf-8") as handle:
            container = json.load(handle)
    except ValueError as exc:
        raise CorruptModelFile(f"{path}: not a valid model file ({exc})") from exc
    if not isinstance(container, dict) or "format_version" not in container:
        raise CorruptModelFile(f"{path}: missing format_version")
    if container["format_version"] != MODEL_FILE_FORMAT_VERSION:
        raise IncompatibleFormatVersion(
            f"{path}: format_version {container['format_version']!r}, "
            f"reader supports {MODEL_FILE_FORMAT_VERSION}"
        )
    try:
        payload = container["payload"]
        checksum = container["checksum"]
    except KeyError as exc:
        raise CorruptModelFile(f"{path}: missing {exc}") from exc
    actual = hashlib.sha256(_canonical_bytes(payload)).hexdigest()
    if actual != checksum:
        raise CorruptModelFile(f"{path}: checksum mismatch")
    try:
        return ScoringModel.from_payload(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModelFile(f"{path}: bad payload ({exc})") from exc


def bump_version(model: ScoringModel, part: str) -> ScoringModel:
    major, minor, patch = parse_version(model.version)
    if part == "major":
        bumped = f"{major + 1}.0.0"
    elif part == "minor":
        bumped = f"{major}.{minor + 1}.0"
    elif part == "patch":
        bumped = f"{major}.{minor}.{patch + 1}"
    else:
        raise ValueError(f"unknown version part {part!r}")
    return replace(model, version=bumped)


def split_field_path(field_path: str) -> list[str]:
    """Split a dotted path, honoring single-quoted segments with dots inside."""
    segments = []
    current = []
    quoted = False
    for ch in field_path:
        if ch == "'":
            quoted = not quoted
            current.append(ch)
        elif ch == "." and not quoted:
            segments.append("".join(current))
            current = []
        else:
            current.append(ch)
    segments.append("".join(current))
    if quoted:
        raise UnknownFieldPath(field_path)
    return [s for s in segments if s]


def model_info(model: ScoringModel, field_path: str | None = None):
    """Address into the model's info document.

    A trailing single-quoted segment is parsed as a threshold query and
    evaluated against the addressed label's table; an unsatisfiable query
    returns None.
    """
    document = model.info()
    if not field_path:
        return document
    node = document
    segments = split_field_path(field_path)
    for position, segment in enumerate(segments):
        if segment.startswith("'") and segment.endswith("'") and len(segment) >= 2:
            if position != len(segments) - 1 or not isinstance(node, list):
                raise UnknownFieldPath(field_path)
            table = ThresholdTable.from_doc(node)
            row = optimize(parse(segment[1:-1]), table)
            return None if row is None else row.to_doc()
        if not isinstance(node, dict) or segment not in node:
            raise UnknownFieldPath(field_path)
        node = node[segment]
    return node


class ModelRegistry:
    """Thread-safe (context, name) -> model map with atomic hot swap."""

    def __init__(self):
        self._models: dict[tuple[str, str], ScoringModel] = {}
        self._lock = threading.RLock()

    def put(self, model: ScoringModel) -> None:
        with self._lock:
            self._models[(model.context, model.name)] = model

    def get(self, context: str, name: str) -> ScoringModel:
        with self._lock:
            model = self._models.get((context, name))
        if model is None:
            raise ModelNotFound(context, name)
        return model

    def contexts(self) -> list[str]:
        with self._lock:
            return sorted({context for context, _ in self._models})

    def model_names(self, context: str) -> list[str]:
        with self._lock:
            return sorted(
                name for ctx, name in self._models if ctx == context
            )

    def has_context(self, context: str) -> bool:
        with self._lock:
            return any(ctx == context for ctx, _ in self._models)

    def load_directory(self, models_dir) -> int:
        """Register every ``*.model`` file under a directory."""
        count = 0
        for path in sorted(Path(models_dir).glob("*.model")):
            self.put(load(path))
            count += 1
        return count
