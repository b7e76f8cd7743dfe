"""Error taxonomy shared across the whole service.

Every error that can surface as a per-item error document carries a stable
``code`` string; the set of codes is the registered taxonomy that wire-level
error documents are validated against.
"""
from __future__ import annotations


class WikiscoreError(Exception):
    """Base class for all domain errors."""

    code = "InternalError"


class DuplicateName(WikiscoreError):
    code = "DuplicateName"


class CycleDetected(WikiscoreError):
    code = "CycleDetected"

    def __init__(self, path):
        self.path = list(path)
        super().__init__("dependency cycle: " + " -> ".join(self.path))


class UnknownDependent(WikiscoreError):
    code = "UnknownDependent"

    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown datasource or feature: {name!r}")


class TypeMismatch(WikiscoreError):
    code = "TypeMismatch"

    def __init__(self, name, expected, value):
        self.name = name
        self.expected = expected
        super().__init__(
            f"value for {name!r} is not a valid {expected}: {value!r}"
        )


class DatasourceError(WikiscoreError):
    """Raised (or propagated) when root data cannot be fetched."""

    code = "DatasourceError"

    def __init__(self, message, name=None):
        self.name = name
        super().__init__(message)


class RevisionNotFound(DatasourceError):
    code = "RevisionNotFound"

    def __init__(self, context_id, revision_id):
        self.context_id = context_id
        self.revision_id = revision_id
        super().__init__(f"no revision {revision_id} in context {context_id!r}")


class UpstreamError(DatasourceError):
    code = "UpstreamError"


class FeatureExtractionError(WikiscoreError):
    code = "FeatureExtractionError"

    def __init__(self, name, cause):
        self.name = name
        self.cause = cause
        super().__init__(f"failed to compute {name!r}: {cause}")


class DegenerateData(WikiscoreError):
    code = "DegenerateData"


class NonFiniteLoss(WikiscoreError):
    code = "NonFiniteLoss"


class DimensionMismatch(WikiscoreError):
    code = "DimensionMismatch"


class ZeroRate(WikiscoreError):
    code = "ZeroRate"


class TooFewExamplesPerClass(WikiscoreError):
    code = "TooFewExamplesPerClass"


class EmptyPredictions(WikiscoreError):
    code = "EmptyPredictions"


class CorruptModelFile(WikiscoreError):
    code = "CorruptModelFile"


class IncompatibleFormatVersion(WikiscoreError):
    code = "IncompatibleFormatVersion"


class UnknownFieldPath(WikiscoreError):
    code = "UnknownFieldPath"

    def __init__(self, path):
        self.path = path
        super().__init__(f"no such field: {path!r}")


class QuerySyntaxError(WikiscoreError):
    code = "QuerySyntaxError"

    def __init__(self, message, position, expected):
        self.position = position
        self.expected = expected
        super().__init__(f"{message} at position {position} (expected {expected})")


class UnknownMetric(WikiscoreError):
    code = "UnknownMetric"

    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown metric: {name!r}")


class BoundOutOfRange(WikiscoreError):
    code = "BoundOutOfRange"


class ModelNotFound(WikiscoreError):
    code = "ModelNotFound"

    def __init__(self, context_id, model_name):
        self.context_id = context_id
        self.model_name = model_name
        super().__init__(f"no model {model_name!r} for context {context_id!r}")


class ScoreTimeout(WikiscoreError):
    code = "TimeoutError"


class LoadShed(WikiscoreError):
    code = "LoadShed"


class MalformedLabelRecord(WikiscoreError):
    code = "MalformedLabelRecord"

    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class UnknownLabel(WikiscoreError):
    code = "UnknownLabel"


class MalformedRequest(WikiscoreError):
    code = "MalformedRequest"


class InvalidFlag(WikiscoreError):
    code = "InvalidFlag"


class PipelineError(WikiscoreError):
    code = "PipelineError"


# Codes allowed in wire-level error documents.
ERROR_CODES = frozenset(
    cls.code
    for cls in list(globals().values())
    if isinstance(cls, type) and issubclass(cls, WikiscoreError)
)
