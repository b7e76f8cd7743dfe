from __future__ import annotations

import numpy as np
import pytest

from wikiscore.errors import EmptyPredictions
from wikiscore.stats import (
    GRID_POINTS,
    build_threshold_table,
    compute_statistics,
    json_label,
    pr_auc,
    roc_auc,
    statistics_from_doc,
)


# -- independent oracles ----------------------------------------------------

def brute_force_roc_auc(scores, truth) -> float:
    """All positive/negative pairs, half credit for ties."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    positives = scores[truth]
    negatives = scores[~truth]
    wins = np.sum(positives[:, None] > negatives[None, :])
    ties = np.sum(positives[:, None] == negatives[None, :])
    return (wins + 0.5 * ties) / (len(positives) * len(negatives))


def brute_force_pr_auc(scores, truth) -> float:
    """Step integration over the recall axis at each distinct score."""
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth, dtype=bool)
    n_pos = int(truth.sum())
    area = 0.0
    last_recall = 0.0
    for threshold in sorted(set(scores.tolist()), reverse=True):
        tp = fp = 0
        for score, is_pos in zip(scores, truth):
            if score >= threshold:
                if is_pos:
                    tp += 1
                else:
                    fp += 1
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / n_pos
        area += (recall - last_recall) * precision
        last_recall = recall
    return area


def binary_predictions(scores, truth):
    """Shape raw (score, is_positive) pairs as cv prediction output."""
    return [
        ({True: s, False: 1 - s}, bool(t)) for s, t in zip(scores, truth)
    ]


# -- spec worked examples -----------------------------------------------------

def test_perfectly_ordered_scores():
    scores = [0.1, 0.4, 0.6, 0.9]
    truth = [False, False, True, True]
    assert roc_auc(scores, truth) == pytest.approx(1.0, abs=1e-12)
    assert pr_auc(scores, truth) == pytest.approx(1.0, abs=1e-12)


def test_reversed_scores():
    assert roc_auc([0.9, 0.1], [False, True]) == pytest.approx(0.0, abs=1e-12)


def test_all_tied_scores():
    assert roc_auc([0.5] * 6, [True, False, True, False, False, True]) == pytest.approx(
        0.5, abs=1e-12
    )


def test_auc_against_brute_force():
    rng = np.random.default_rng(17)
    for _ in range(50):
        n = int(rng.integers(4, 120))
        scores = rng.choice(np.round(rng.uniform(size=30), 2), size=n)
        truth = rng.uniform(size=n) < 0.4
        if truth.all() or not truth.any():
            truth[0] = True
            truth[1] = False
        assert roc_auc(scores, truth) == pytest.approx(
            brute_force_roc_auc(scores, truth), abs=1e-9
        )
        assert pr_auc(scores, truth) == pytest.approx(
            brute_force_pr_auc(scores, truth), abs=1e-9
        )


# -- threshold tables --------------------------------------------------------

def test_table_from_four_scores():
    table = build_threshold_table([0.1, 0.4, 0.6, 0.9], [False, False, True, True])
    thresholds = [row.threshold for row in table.rows]
    assert thresholds == [0.1, 0.4, 0.6, 0.9, 1.0]
    by_threshold = {row.threshold: row for row in table.rows}
    full_recall = by_threshold[0.6]
    assert (full_recall.tp, full_recall.fp, full_recall.tn, full_recall.fn) == (2, 0, 2, 0)
    assert full_recall.recall == 1.0
    assert full_recall.precision == 1.0
    assert full_recall.filter_rate == 0.5
    assert full_recall.match_rate == 0.5
    top = by_threshold[1.0]
    assert (top.tp, top.fp) == (0, 0)
    assert top.filter_rate == 1.0


def test_table_invariants_on_random_data():
    rng = np.random.default_rng(23)
    for _ in range(25):
        n = int(rng.integers(2, 150))
        scores = np.round(rng.uniform(size=n), 3)
        truth = rng.uniform(size=n) < 0.5
        table = build_threshold_table(scores, truth)
        rows = table.rows
        assert all(b.threshold > a.threshold for a, b in zip(rows, rows[1:]))
        assert all(b.recall <= a.recall for a, b in zip(rows, rows[1:]))
        assert all(b.filter_rate >= a.filter_rate for a, b in zip(rows, rows[1:]))
        for row in rows:
            assert row.tp + row.fp + row.tn + row.fn == n
            assert row.filter_rate == (row.tn + row.fn) / n
            assert row.match_rate == pytest.approx(1 - row.filter_rate, abs=1e-12)
        assert len(rows) <= GRID_POINTS


def test_statistics_confusion_and_micro_identities():
    rng = np.random.default_rng(31)
    n = 400
    scores = rng.uniform(size=n)
    truth = rng.uniform(size=n) < 0.3
    stats = compute_statistics(binary_predictions(scores, truth), (False, True))
    assert sum(stats.label_counts.values()) == n
    confusion_total = sum(
        count for row in stats.predictions.values() for count in row.values()
    )
    assert confusion_total == n
    accuracy = sum(stats.predictions[l][l] for l in (False, True)) / n
    assert stats.precision["micro"] == pytest.approx(accuracy, abs=1e-12)
    assert stats.recall["micro"] == pytest.approx(accuracy, abs=1e-12)
    assert stats.precision["macro"] == pytest.approx(
        (stats.precision["labels"][False] + stats.precision["labels"][True]) / 2,
        abs=1e-12,
    )
    for metric in (stats.precision, stats.recall, stats.pr_auc, stats.roc_auc):
        for value in (metric["micro"], metric["macro"], *metric["labels"].values()):
            assert 0.0 <= value <= 1.0


def test_statistics_multiclass_argmax_tie_break():
    predictions = [
        ({"a": 0.5, "b": 0.5, "c": 0.0}, "a"),  # tie resolves to "a"
        ({"a": 0.1, "b": 0.7, "c": 0.2}, "b"),
        ({"a": 0.2, "b": 0.2, "c": 0.6}, "c"),
        ({"a": 0.4, "b": 0.3, "c": 0.3}, "a"),
    ]
    stats = compute_statistics(predictions, ("a", "b", "c"))
    assert stats.predictions["a"]["a"] == 2
    assert stats.precision["micro"] == 1.0


def test_statistics_empty_rejected():
    with pytest.raises(EmptyPredictions):
        compute_statistics([], (False, True))


def test_statistics_doc_roundtrip():
    rng = np.random.default_rng(2)
    scores = rng.uniform(size=60)
    truth = rng.uniform(size=60) < 0.5
    stats = compute_statistics(binary_predictions(scores, truth), (False, True))
    doc = stats.to_doc()
    assert set(doc) == {
        "counts", "precision", "recall", "pr_auc", "roc_auc", "thresholds",
    }
    assert set(doc["counts"]) == {"n", "labels", "predictions"}
    rebuilt = statistics_from_doc(doc, (False, True))
    assert rebuilt.to_doc() == doc


def test_json_label_rendering():
    assert json_label(True) == "true"
    assert json_label(False) == "false"
    assert json_label("Stub") == "Stub"
