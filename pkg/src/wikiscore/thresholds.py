"""Query language for picking an operating threshold from a table.

Grammar:  direction metric '@' metric cmp number
e.g.      maximum recall @ precision >= 0.9

Keywords are case-sensitive; whitespace between tokens is free.  An
optimization that no row satisfies is a value (None), not an error, so
clients can distinguish "no such operating point" from failure.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import BoundOutOfRange, QuerySyntaxError, UnknownMetric
from .stats import ThresholdRow, ThresholdTable

METRICS = ("precision", "recall", "fpr", "accuracy", "f1", "filter_rate", "match_rate")
DIRECTIONS = ("maximum", "minimum")
COMPARATORS = (">=", "<=", ">", "<")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<word>[A-Za-z_][A-Za-z_0-9]*)|(?P<number>\d+(?:\.\d+)?|\.\d+)"
    r"|(?P<at>@)|(?P<cmp>>=|<=|>|<))"
)


@dataclass(frozen=True)
class ThresholdQuery:
    direction: str
    target_metric: str
    constraint_metric: str
    comparator: str
    bound: float

    def __str__(self) -> str:
        return (
            f"{self.direction} {self.target_metric} @ "
            f"{self.constraint_metric} {self.comparator} {self.bound:g}"
        )


def _tokenize(text: str):
    tokens = []
    position = 0
    while position < len(text):
        match = _TOKEN_RE.match(text, position)
        if match is None:
            stripped = text[position:].lstrip()
            if not stripped:
                break
            bad_at = len(text) - len(stripped)
            raise QuerySyntaxError(
                f"unexpected character {text[bad_at]!r}", bad_at, "a query token"
            )
        for kind in ("word", "number", "at", "cmp"):
            value = match.group(kind)
            if value is not None:
                tokens.append((kind, value, match.start(kind)))
                break
        position = match.end()
    return tokens


def parse(query_string: str) -> ThresholdQuery:
    tokens = _tokenize(query_string)
    cursor = 0

    def take(kind: str, expected: str):
        nonlocal cursor
        if cursor >= len(tokens):
            raise QuerySyntaxError("query ended early", len(query_string), expected)
        token_kind, value, position = tokens[cursor]
        if token_kind != kind:
            raise QuerySyntaxError(f"got {value!r}", position, expected)
        cursor += 1
        return value, position

    direction, position = take("word", "'maximum' or 'minimum'")
    if direction not in DIRECTIONS:
        raise QuerySyntaxError(
            f"got {direction!r}", position, "'maximum' or 'minimum'"
        )

    def metric(expected: str) -> str:
        value, _ = take("word", expected)
        if value not in METRICS:
            raise UnknownMetric(value)
        return value

    target = metric("a metric name")
    take("at", "'@'")
    constraint = metric("a metric name")
    comparator, _ = take("cmp", "a comparator (>=, <=, >, <)")
    raw_bound, _ = take("number", "a number in [0, 1]")
    if cursor != len(tokens):
        _, value, position = tokens[cursor]
        raise QuerySyntaxError(f"got trailing {value!r}", position, "end of query")
    bound = float(raw_bound)
    if not 0.0 <= bound <= 1.0:
        raise BoundOutOfRange(f"bound {bound!r} outside [0, 1]")
    return ThresholdQuery(direction, target, constraint, comparator, bound)


_COMPARE = {
    ">=": lambda a, b: a >= b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    "<": lambda a, b: a < b,
}


def optimize(query: ThresholdQuery, table: ThresholdTable) -> ThresholdRow | None:
    """Best row under the constraint, or None when unsatisfiable.

    Ties on the target metric are broken toward the greater threshold.
    """
    compare = _COMPARE[query.comparator]
    best: ThresholdRow | None = None
    for row in table.rows:
        if not compare(row.metric(query.constraint_metric), query.bound):
            continue
        if best is None:
            best = row
            continue
        value = row.metric(query.target_metric)
        best_value = best.metric(query.target_metric)
        if query.direction == "maximum":
            better = value > best_value
        else:
            better = value < best_value
        if better or (value == best_value and row.threshold > best.threshold):
            best = row
    return best
