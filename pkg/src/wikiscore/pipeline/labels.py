"""Label files: campaign exports and trace-extracted labels.

A label file is newline-delimited JSON.  The first line is a header block
{"campaign_id", "label_set", "source"}; every following line is a record
{"rev_id", "label", "context"}.  Validation failures carry line numbers.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from urllib.request import url2pathname

from ..errors import MalformedLabelRecord, UnknownLabel

SOURCES = ("manual_campaign", "trace_extraction")


@dataclass(frozen=True)
class LabelHeader:
    campaign_id: str
    label_set: tuple
    source: str

    def to_doc(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "label_set": list(self.label_set),
            "source": self.source,
        }


def _local_path(source: str) -> str:
    if source.startswith("file://"):
        return url2pathname(source[len("file://"):])
    return source


def read_label_file(path):
    """Parse and validate a label file; returns (header, records)."""
    with open(_local_path(str(path)), encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or not lines[0].strip():
        raise MalformedLabelRecord(1, "missing header block")
    try:
        header_doc = json.loads(lines[0])
    except ValueError as exc:
        raise MalformedLabelRecord(1, f"bad header: {exc}") from exc
    try:
        header = LabelHeader(
            campaign_id=header_doc["campaign_id"],
            label_set=tuple(header_doc["label_set"]),
            source=header_doc["source"],
        )
    except (KeyError, TypeError) as exc:
        raise MalformedLabelRecord(1, f"bad header: {exc}") from exc
    if header.source not in SOURCES:
        raise MalformedLabelRecord(1, f"unknown source {header.source!r}")
    known = set(header.label_set)
    seen: dict[int, int] = {}
    records = []
    for line_number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            rev_id = int(doc["rev_id"])
            label = doc["label"]
            context = doc["context"]
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedLabelRecord(line_number, f"bad record: {exc}") from exc
        if label not in known:
            raise UnknownLabel(
                f"line {line_number}: label {label!r} not in {sorted(map(str, known))}"
            )
        if rev_id in seen:
            raise MalformedLabelRecord(
                line_number,
                f"duplicate rev_id {rev_id} (first seen on line {seen[rev_id]})",
            )
        seen[rev_id] = line_number
        records.append({"rev_id": rev_id, "label": label, "context": context})
    return header, records


def write_label_file(path, header: LabelHeader, records) -> None:
    tmp_path = f"{path}.tmp"
    with open(tmp_path, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(header.to_doc(), sort_keys=True) + "\n")
        for record in records:
            handle.write(json.dumps(record, sort_keys=True) + "\n")
    os.replace(tmp_path, path)


def fetch_labels(source, out_path):
    """Validate a campaign export and write the normalized label file."""
    header, records = read_label_file(source)
    write_label_file(out_path, header, records)
    return header, len(records)


def labels_from_traces(
    events_path,
    campaign_id: str,
    label_set,
    out_path,
    label_field: str = "assessment",
):
    """Convert an assessment-events fixture file into a label file.

    Events are newline-delimited JSON with at least rev_id, context, and the
    assessment field; the latest event per revision wins.
    """
    label_set = tuple(label_set)
    known = set(label_set)
    latest: dict[int, dict] = {}
    with open(_local_path(str(events_path)), encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                rev_id = int(doc["rev_id"])
                label = doc[label_field]
                context = doc["context"]
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedLabelRecord(line_number, f"bad event: {exc}") from exc
            if label not in known:
                raise UnknownLabel(
                    f"line {line_number}: label {label!r} not in {sorted(map(str, known))}"
                )
            latest[rev_id] = {"rev_id": rev_id, "label": label, "context": context}
    header = LabelHeader(
        campaign_id=campaign_id, label_set=label_set, source="trace_extraction"
    )
    records = [latest[rev_id] for rev_id in sorted(latest)]
    write_label_file(out_path, header, records)
    return header, len(records)
