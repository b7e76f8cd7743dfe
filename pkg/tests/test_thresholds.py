from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wikiscore.errors import BoundOutOfRange, QuerySyntaxError, UnknownMetric
from wikiscore.stats import GRID_POINTS, build_threshold_table
from wikiscore.thresholds import (
    COMPARATORS,
    DIRECTIONS,
    METRICS,
    ThresholdQuery,
    optimize,
    parse,
)


def four_score_table():
    return build_threshold_table([0.1, 0.4, 0.6, 0.9], [False, False, True, True])


# -- independent oracle -------------------------------------------------------

def oracle_optimize(query: ThresholdQuery, scores, truth):
    """Exhaustive sweep over the full 1001-point grid, no collapsing."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    n = len(scores)
    compare = {
        ">=": lambda a, b: a >= b,
        "<=": lambda a, b: a <= b,
        ">": lambda a, b: a > b,
        "<": lambda a, b: a < b,
    }[query.comparator]
    best = None
    for i in range(GRID_POINTS):
        threshold = i / (GRID_POINTS - 1)
        predicted = scores >= threshold
        tp = int(np.sum(predicted & truth))
        fp = int(np.sum(predicted & ~truth))
        fn = int(np.sum(~predicted & truth))
        tn = n - tp - fp - fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        metrics = {
            "precision": precision,
            "recall": recall,
            "fpr": fp / (fp + tn) if fp + tn else 0.0,
            "accuracy": (tp + tn) / n if n else 0.0,
            "f1": (
                2 * precision * recall / (precision + recall)
                if precision + recall
                else 0.0
            ),
            "filter_rate": (tn + fn) / n if n else 0.0,
            "match_rate": 1.0 - ((tn + fn) / n if n else 0.0),
        }
        if not compare(metrics[query.constraint_metric], query.bound):
            continue
        value = metrics[query.target_metric]
        if best is None:
            best = (value, threshold)
            continue
        if query.direction == "maximum":
            better = value > best[0]
        else:
            better = value < best[0]
        if better or (value == best[0] and threshold > best[1]):
            best = (value, threshold)
    return best


# -- parsing ------------------------------------------------------------------

def test_parse_recall_at_precision():
    query = parse("maximum recall @ precision >= 0.9")
    assert query == ThresholdQuery("maximum", "recall", "precision", ">=", 0.9)


def test_parse_filter_rate_at_recall():
    query = parse("maximum filter_rate @ recall >= 0.75")
    assert query.target_metric == "filter_rate"
    assert query.constraint_metric == "recall"
    assert query.bound == 0.75


def test_parse_tight_whitespace():
    assert parse("minimum fpr@recall>=0.5") == ThresholdQuery(
        "minimum", "fpr", "recall", ">=", 0.5
    )


def test_parse_unknown_metric():
    with pytest.raises(UnknownMetric) as exc_info:
        parse("maximum zeal @ recall >= 0.5")
    assert exc_info.value.name == "zeal"


def test_parse_bad_direction_positions():
    with pytest.raises(QuerySyntaxError) as exc_info:
        parse("best recall @ precision >= 0.9")
    assert exc_info.value.position == 0
    assert "maximum" in exc_info.value.expected


def test_parse_truncated_query():
    with pytest.raises(QuerySyntaxError):
        parse("maximum recall @ precision >=")


def test_parse_trailing_tokens():
    with pytest.raises(QuerySyntaxError):
        parse("maximum recall @ precision >= 0.9 extra")


def test_parse_bound_out_of_range():
    with pytest.raises(BoundOutOfRange):
        parse("maximum recall @ precision >= 1.5")


def test_parse_bad_character_position():
    with pytest.raises(QuerySyntaxError) as exc_info:
        parse("maximum recall @ precision >= $")
    assert exc_info.value.position == 30


@settings(max_examples=100, deadline=None)
@given(
    direction=st.sampled_from(DIRECTIONS),
    target=st.sampled_from(METRICS),
    constraint=st.sampled_from(METRICS),
    comparator=st.sampled_from(COMPARATORS),
    bound=st.integers(min_value=0, max_value=1000).map(lambda i: i / 1000),
)
def test_print_parse_roundtrip(direction, target, constraint, comparator, bound):
    query = ThresholdQuery(direction, target, constraint, comparator, bound)
    assert parse(str(query)) == query


# -- optimization -------------------------------------------------------------

def test_optimize_max_filter_rate_at_full_recall():
    row = optimize(parse("maximum filter_rate @ recall >= 1.0"), four_score_table())
    assert row.threshold == 0.6
    assert row.recall == 1.0
    assert row.precision == 1.0
    assert row.filter_rate == 0.5


def test_optimize_unsatisfiable_is_none():
    table = build_threshold_table([0.5, 0.5], [True, False])  # inseparable
    assert optimize(parse("maximum recall @ precision >= 1.0"), table) is None


def test_optimize_vacuous_constraint_tie_breaks_high():
    row = optimize(parse("minimum fpr @ recall >= 0.0"), four_score_table())
    assert row.threshold == 1.0
    assert row.fpr == 0.0
    assert row.recall == 0.0


def test_optimize_monotone_relaxation():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = int(rng.integers(3, 80))
        scores = np.round(rng.uniform(size=n), 3)
        truth = rng.uniform(size=n) < 0.5
        table = build_threshold_table(scores, truth)
        bound = float(rng.integers(0, 11)) / 10
        tight = optimize(
            ThresholdQuery("maximum", "filter_rate", "recall", ">=", bound), table
        )
        loose = optimize(
            ThresholdQuery("maximum", "filter_rate", "recall", ">=", bound / 2), table
        )
        if tight is not None:
            assert loose is not None
            assert loose.filter_rate >= tight.filter_rate


def test_optimize_matches_oracle_sweep():
    rng = np.random.default_rng(99)
    for _ in range(50):
        n = int(rng.integers(2, 120))
        scores = np.round(rng.uniform(size=n), 3)
        truth = rng.uniform(size=n) < rng.uniform(0.2, 0.8)
        table = build_threshold_table(scores, truth)
        query = ThresholdQuery(
            direction=str(rng.choice(DIRECTIONS)),
            target_metric=str(rng.choice(METRICS)),
            constraint_metric=str(rng.choice(METRICS)),
            comparator=str(rng.choice(COMPARATORS)),
            bound=float(rng.integers(0, 101)) / 100,
        )
        row = optimize(query, table)
        expected = oracle_optimize(query, scores, truth)
        if expected is None:
            assert row is None
        else:
            assert row is not None
            assert row.metric(query.target_metric) == expected[0]
            assert row.threshold == expected[1]
