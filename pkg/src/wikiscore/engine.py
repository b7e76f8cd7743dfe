"""Orchestration of extraction and prediction into score documents.

Per-item failures become error documents rather than exceptions so one
poisoned revision can never take down its siblings in a batch.
"""
from __future__ import annotations

import statistics as pystats
import time
from dataclasses import dataclass, field

from .datasources import RevisionRecord
from .errors import (
    ERROR_CODES,
    DatasourceError,
    FeatureExtractionError,
    MalformedRequest,
    ModelNotFound,
    RevisionNotFound,
    ScoreTimeout,
    WikiscoreError,
)
from .features.graph import (
    EMPTY_OVERLAY,
    ExtractionContext,
    InjectionOverlay,
    extract_many,
)
from .modelstore import ModelRegistry, ScoringModel
from .stats import argmax_label, json_label

AUDIT_BINS = 50


@dataclass(frozen=True)
class ScoreDocument:
    prediction: object
    probability: dict  # json-style label key -> probability
    features: dict | None = None

    def to_doc(self) -> dict:
        doc = {"prediction": self.prediction, "probability": dict(self.probability)}
        if self.features is not None:
            doc["features"] = dict(self.features)
        return doc


@dataclass(frozen=True)
class ErrorDocument:
    type: str
    message: str

    def __post_init__(self):
        if self.type not in ERROR_CODES:
            raise ValueError(f"unregistered error type {self.type!r}")

    def to_doc(self) -> dict:
        return {"type": self.type, "message": self.message}

    @classmethod
    def from_exception(cls, exc: WikiscoreError) -> "ErrorDocument":
        return cls(type=exc.code, message=str(exc))


@dataclass
class ScoreRequest:
    context_id: str
    model_names: list[str]
    revision_ids: list[int]
    overlay: InjectionOverlay = EMPTY_OVERLAY
    include_features: bool = False

    def __post_init__(self):
        if not self.model_names:
            raise MalformedRequest("no model names given")
        if not self.revision_ids:
            raise MalformedRequest("no revision ids given")
        if self.overlay and len(self.revision_ids) != 1:
            raise MalformedRequest("feature injection requires a single revision")


@dataclass
class AuditSummary:
    """Histogram of a target class probability over a revision set."""

    target_label: object
    bin_counts: list[int]
    mean: float | None
    median: float | None
    scored: int
    errors: dict = field(default_factory=dict)

    @property
    def bins(self) -> list[tuple[float, float, int]]:
        width = 1.0 / AUDIT_BINS
        return [
            (i * width, (i + 1) * width, count)
            for i, count in enumerate(self.bin_counts)
        ]

    def mode_bin_center(self) -> float | None:
        """Center of the fullest bin."""
        if self.scored == 0:
            return None
        index = max(range(AUDIT_BINS), key=lambda i: self.bin_counts[i])
        return (index + 0.5) / AUDIT_BINS


def _feature_doc(names, values) -> dict:
    return {name: value for name, value in zip(names, values)}


class ScoringEngine:
    """Applies registered models to revisions via the feature graph."""

    def __init__(self, registry: ModelRegistry, client, pools=None, timeout: float = 10.0):
        self.registry = registry
        self.client = client
        self.pools = pools
        self.timeout = timeout
        self._graphs: dict[int, object] = {}

    def _graph_for(self, model: ScoringModel):
        key = id(model)
        graph = self._graphs.get(key)
        if graph is None:
            graph = model.build_graph()
            self._graphs[key] = graph
        return graph

    def score_one(
        self,
        context_id: str,
        model_name: str,
        revision_id: int,
        overlay: InjectionOverlay = EMPTY_OVERLAY,
        include_features: bool = False,
        record: RevisionRecord | None = None,
    ):
        """Score a single (revision, model) pair; errors become documents."""
        started = time.monotonic()
        try:
            model = self.registry.get(context_id, model_name)
        except ModelNotFound as exc:
            return ErrorDocument.from_exception(exc)
        graph = self._graph_for(model)
        if record is None and self.pools is not None and not overlay:
            # IO stage on the IO pool; extraction and prediction stay on the
            # calling (CPU) side.  Overlay requests fetch lazily so a fully
            # injected revision never needs to exist.
            try:
                record = self.pools.run_io(
                    self.client.get_revision, context_id, revision_id
                )
            except RevisionNotFound as exc:
                return ErrorDocument.from_exception(exc)
            except DatasourceError as exc:
                return ErrorDocument(
                    type=FeatureExtractionError.code,
                    message=f"feature extraction failed: {exc}",
                )
        ctx = ExtractionContext(
            graph,
            context_id,
            revision_id,
            datasource_client=self.client,
            overlay=overlay,
            record=record,
        )
        try:
            values = extract_many(ctx, model.features)
        except RevisionNotFound as exc:
            return ErrorDocument.from_exception(exc)
        except WikiscoreError as exc:
            return ErrorDocument(
                type=FeatureExtractionError.code,
                message=f"feature extraction failed: {exc}",
            )
        probabilities = model.estimator.predict_proba(
            [float(value) for value in values]
        )
        if time.monotonic() - started > self.timeout:
            return ErrorDocument(
                type=ScoreTimeout.code,
                message=f"score exceeded {self.timeout}s budget",
            )
        prediction = argmax_label(probabilities, model.label_set)
        document = ScoreDocument(
            prediction=prediction,
            probability={
                json_label(label): probabilities[label] for label in model.label_set
            },
            features=_feature_doc(model.features, values) if include_features else None,
        )
        return document

    def score_batch(self, request: ScoreRequest) -> dict:
        """IO stage once per context, CPU stage fanned across the pool."""
        if request.overlay:
            raise MalformedRequest("batch scoring does not accept injections")
        records = self.client.get_revisions_batch(
            request.context_id, request.revision_ids
        )
        jobs = []
        for revision_id, record in zip(request.revision_ids, records):
            for model_name in request.model_names:
                jobs.append((revision_id, model_name, record))

        def run(job):
            revision_id, model_name, record = job
            if isinstance(record, WikiscoreError):
                return ErrorDocument.from_exception(record)
            try:
                return self.score_one(
                    request.context_id,
                    model_name,
                    revision_id,
                    include_features=request.include_features,
                    record=record,
                )
            except WikiscoreError as exc:  # defensive: isolate per item
                return ErrorDocument.from_exception(exc)

        if self.pools is not None:
            outcomes = self.pools.map_cpu(run, jobs)
        else:
            outcomes = [run(job) for job in jobs]
        results: dict = {}
        for (revision_id, model_name, _), outcome in zip(jobs, outcomes):
            results.setdefault(revision_id, {})[model_name] = outcome
        return results

    def audit_inject(
        self,
        context_id: str,
        model_name: str,
        revision_ids,
        overlay: InjectionOverlay = EMPTY_OVERLAY,
        target_label=None,
    ) -> AuditSummary:
        """Distribution of the target class probability under an overlay.

        Per-item errors are counted and excluded from the histogram.
        """
        model = self.registry.get(context_id, model_name)
        if target_label is None:
            target_label = model.label_set[-1]
        if target_label not in model.label_set:
            raise MalformedRequest(
                f"label {target_label!r} not in model label set"
            )
        target_key = json_label(target_label)
        bin_counts = [0] * AUDIT_BINS
        values = []
        errors: dict[str, int] = {}
        for revision_id in revision_ids:
            outcome = self.score_one(context_id, model_name, revision_id, overlay=overlay)
            if isinstance(outcome, ErrorDocument):
                errors[outcome.type] = errors.get(outcome.type, 0) + 1
                continue
            probability = outcome.probability[target_key]
            values.append(probability)
            index = min(int(probability * AUDIT_BINS), AUDIT_BINS - 1)
            bin_counts[index] += 1
        return AuditSummary(
            target_label=target_label,
            bin_counts=bin_counts,
            mean=pystats.fmean(values) if values else None,
            median=pystats.median(values) if values else None,
            scored=len(values),
            errors=errors,
        )
