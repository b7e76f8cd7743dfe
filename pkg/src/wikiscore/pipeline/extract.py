"""Feature extraction over a label file, producing a training dataset.

The dataset is newline-delimited JSON: a header line (label header plus
feature names), then one row per labeled revision with its feature vector
appended.  Extraction is resumable: rows already present in the output are
not recomputed.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import hashlib

from ..datasources import FixtureClient
from ..errors import PipelineError, WikiscoreError
from ..estimators import LabeledDataset
from ..features.catalog import load_feature_set
from ..features.graph import ExtractionContext, extract_many
from .labels import read_label_file


@dataclass
class ExtractReport:
    total: int
    extracted: int
    reused: int
    skipped: list  # (rev_id, error message)


def _read_existing_rows(out_path, feature_set_hash: str) -> dict:
    """Rows from a previous run, reusable only if the feature set is unchanged."""
    rows = {}
    if not os.path.exists(out_path):
        return rows
    try:
        with open(out_path, encoding="utf-8") as handle:
            lines = handle.read().splitlines()
        header = json.loads(lines[0])
    except (ValueError, IndexError):
        return rows
    if header.get("feature_set_hash") != feature_set_hash:
        return rows
    for line in lines[1:]:
        if not line.strip():
            continue
        doc = json.loads(line)
        rows[doc["rev_id"]] = doc
    return rows


def read_dataset(path):
    """Load a dataset file; returns (header doc, rows)."""
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise PipelineError(f"empty dataset file: {path}")
    header = json.loads(lines[0])
    rows = [json.loads(line) for line in lines[1:] if line.strip()]
    return header, rows


def dataset_to_labeled(path) -> LabeledDataset:
    header, rows = read_dataset(path)
    feature_names = tuple(header["feature_names"])
    matrix = [[float(v) for v in row["features"]] for row in rows]
    labels = [row["label"] for row in rows]
    label_set = _label_set_from_doc(header["label_set"], labels)
    return LabeledDataset(matrix, labels, label_set, feature_names)


def _label_set_from_doc(label_set_doc, labels) -> tuple:
    # JSON round-trips bools natively; nothing to coerce today, but keep the
    # label order exactly as the header declares it.
    return tuple(label_set_doc)


def extract_features(
    labels_path,
    feature_set_path,
    fixtures_dir,
    out_path,
    failure_tolerance: float = 0.1,
) -> ExtractReport:
    """Append feature vectors to every label row; resumable and deterministic."""
    header, records = read_label_file(labels_path)
    feature_set = load_feature_set(feature_set_path)
    feature_set_hash = hashlib.sha256(
        json.dumps(feature_set.document, sort_keys=True).encode()
    ).hexdigest()
    graph = feature_set.build_graph()
    client = FixtureClient(fixtures_dir)
    existing = _read_existing_rows(out_path, feature_set_hash)

    rows = []
    skipped = []
    extracted = 0
    reused = 0
    for record in records:
        rev_id = record["rev_id"]
        previous = existing.get(rev_id)
        if (
            previous is not None
            and previous["label"] == record["label"]
            and previous["context"] == record["context"]
        ):
            rows.append(previous)
            reused += 1
            continue
        ctx = ExtractionContext(
            graph, record["context"], rev_id, datasource_client=client
        )
        try:
            values = extract_many(ctx, feature_set.features)
        except WikiscoreError as exc:
            skipped.append((rev_id, str(exc)))
            continue
        rows.append(
            {
                "rev_id": rev_id,
                "label": record["label"],
                "context": record["context"],
                "features": [_plain(v) for v in values],
            }
        )
        extracted += 1

    if len(records) and len(skipped) / len(records) > failure_tolerance:
        detail = "; ".join(f"rev {rev}: {msg}" for rev, msg in skipped[:20])
        raise PipelineError(
            f"{len(skipped)}/{len(records)} rows failed extraction "
            f"(tolerance {failure_tolerance:.0%}): {detail}"
        )

    out_header = {
        "campaign_id": header.campaign_id,
        "label_set": list(header.label_set),
        "source": header.source,
        "feature_set": feature_set.name,
        "feature_set_hash": feature_set_hash,
        "feature_names": list(feature_set.features),
    }
    tmp_path = f"{out_path}.tmp"
    with open(tmp_path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(out_header, sort_keys=True) + "\n")
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True) + "\n")
    os.replace(tmp_path, out_path)
    return ExtractReport(
        total=len(records), extracted=extracted, reused=reused, skipped=skipped
    )


def _plain(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float, str)):
        return value
    return float(value)
