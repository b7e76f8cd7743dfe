"""Fitness statistics computed from held-out predictions.

Everything downstream (model info documents, threshold optimization) is
derived from the output of :func:`compute_statistics`, so the conventions
are pinned here: argmax predictions break ties by label-set order, AUC
gives half credit to ties, average precision is step-integrated over the
recall axis, and threshold tables are swept on a fixed 1001-point grid
with runs of identical confusion counts collapsed to their highest
threshold.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyPredictions

GRID_POINTS = 1001

ROW_FIELDS = (
    "threshold",
    "tp",
    "fp",
    "tn",
    "fn",
    "precision",
    "recall",
    "fpr",
    "accuracy",
    "f1",
    "filter_rate",
    "match_rate",
)


def json_label(label) -> str:
    """Render a class label the way it appears as a JSON object key."""
    if isinstance(label, bool):
        return "true" if label else "false"
    return str(label)


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


@dataclass(frozen=True)
class ThresholdRow:
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    fpr: float
    accuracy: float
    f1: float
    filter_rate: float
    match_rate: float

    def to_doc(self) -> dict:
        return {name: getattr(self, name) for name in ROW_FIELDS}

    @classmethod
    def from_doc(cls, doc: dict) -> "ThresholdRow":
        return cls(**{name: doc[name] for name in ROW_FIELDS})

    def metric(self, name: str) -> float:
        return getattr(self, name)


def make_row(threshold: float, tp: int, fp: int, tn: int, fn: int) -> ThresholdRow:
    n = tp + fp + tn + fn
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    return ThresholdRow(
        threshold=threshold,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        precision=precision,
        recall=recall,
        fpr=_ratio(fp, fp + tn),
        accuracy=_ratio(tp + tn, n),
        f1=_ratio(2 * precision * recall, precision + recall),
        filter_rate=_ratio(tn + fn, n),
        match_rate=1.0 - _ratio(tn + fn, n),
    )


@dataclass(frozen=True)
class ThresholdTable:
    rows: tuple[ThresholdRow, ...]

    def to_doc(self) -> list:
        return [row.to_doc() for row in self.rows]

    @classmethod
    def from_doc(cls, docs) -> "ThresholdTable":
        return cls(tuple(ThresholdRow.from_doc(doc) for doc in docs))


def build_threshold_table(scores, truth) -> ThresholdTable:
    """Sweep the 1001-point grid; ``score >= threshold`` predicts positive."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    grid = np.arange(GRID_POINTS) / (GRID_POINTS - 1)
    predicted = scores[:, None] >= grid[None, :]
    tp = (predicted & truth[:, None]).sum(axis=0)
    fp = (predicted & ~truth[:, None]).sum(axis=0)
    total_pos = int(truth.sum())
    total_neg = int(len(truth) - total_pos)
    rows = []
    previous = None
    for i in range(GRID_POINTS):
        counts = (int(tp[i]), int(fp[i]), total_neg - int(fp[i]), total_pos - int(tp[i]))
        if counts == previous:
            # Extend the run: keep the greatest threshold with these counts.
            rows[-1] = (float(grid[i]), counts)
        else:
            rows.append((float(grid[i]), counts))
            previous = counts
    return ThresholdTable(
        tuple(make_row(threshold, *counts) for threshold, counts in rows)
    )


def roc_auc(scores, truth) -> float:
    """Probability a random positive outscores a random negative; ties count half.

    Computed with average ranks, which is exactly the pairwise tie-aware sum.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    n_pos = int(truth.sum())
    n_neg = len(truth) - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    rank_sum = float(ranks[truth].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def pr_auc(scores, truth) -> float:
    """Average precision: step integration of precision over the recall axis."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth, dtype=bool)
    n_pos = int(truth.sum())
    if n_pos == 0:
        return 0.0
    thresholds = np.unique(scores)[::-1]
    area = 0.0
    previous_recall = 0.0
    for threshold in thresholds:
        predicted = scores >= threshold
        tp = int((predicted & truth).sum())
        precision = _ratio(tp, int(predicted.sum()))
        recall = tp / n_pos
        area += (recall - previous_recall) * precision
        previous_recall = recall
    return area


@dataclass(frozen=True)
class Statistics:
    """Counts, averaged metrics, and per-label threshold tables."""

    n: int
    label_set: tuple
    label_counts: dict
    predictions: dict  # actual -> predicted -> count
    precision: dict
    recall: dict
    pr_auc: dict
    roc_auc: dict
    thresholds: dict  # label -> ThresholdTable

    def to_doc(self) -> dict:
        return {
            "counts": {
                "n": self.n,
                "labels": {json_label(l): c for l, c in self.label_counts.items()},
                "predictions": {
                    json_label(actual): {
                        json_label(predicted): count
                        for predicted, count in row.items()
                    }
                    for actual, row in self.predictions.items()
                },
            },
            "precision": _metric_doc(self.precision),
            "recall": _metric_doc(self.recall),
            "pr_auc": _metric_doc(self.pr_auc),
            "roc_auc": _metric_doc(self.roc_auc),
            "thresholds": {
                json_label(label): table.to_doc()
                for label, table in self.thresholds.items()
            },
        }


def _metric_doc(metric: dict) -> dict:
    return {
        "micro": metric["micro"],
        "macro": metric["macro"],
        "labels": {json_label(l): v for l, v in metric["labels"].items()},
    }


def argmax_label(probabilities: dict, label_set) -> object:
    """Highest-probability label; ties resolve to the earliest in label_set."""
    best = None
    best_p = -1.0
    for label in label_set:
        p = probabilities[label]
        if p > best_p:
            best = label
            best_p = p
    return best


def compute_statistics(cv_predictions, label_set) -> Statistics:
    """Aggregate held-out (probability map, true label) pairs."""
    if not cv_predictions:
        raise EmptyPredictions("no predictions to aggregate")
    label_set = tuple(label_set)
    n = len(cv_predictions)
    label_counts = {label: 0 for label in label_set}
    predictions = {
        actual: {predicted: 0 for predicted in label_set} for actual in label_set
    }
    for probabilities, actual in cv_predictions:
        label_counts[actual] += 1
        predictions[actual][argmax_label(probabilities, label_set)] += 1

    per_label_precision = {}
    per_label_recall = {}
    correct = 0
    for label in label_set:
        tp = predictions[label][label]
        predicted_as = sum(predictions[actual][label] for actual in label_set)
        per_label_precision[label] = _ratio(tp, predicted_as)
        per_label_recall[label] = _ratio(tp, label_counts[label])
        correct += tp
    accuracy = correct / n

    per_label_pr = {}
    per_label_roc = {}
    thresholds = {}
    for label in label_set:
        scores = np.array([p[label] for p, _ in cv_predictions])
        truth = np.array([actual == label for _, actual in cv_predictions])
        per_label_pr[label] = pr_auc(scores, truth)
        per_label_roc[label] = roc_auc(scores, truth)
        thresholds[label] = build_threshold_table(scores, truth)

    def averaged(per_label: dict, micro: float | None = None) -> dict:
        frequency_weighted = sum(
            per_label[l] * label_counts[l] for l in label_set
        ) / n
        return {
            "micro": frequency_weighted if micro is None else micro,
            "macro": sum(per_label.values()) / len(label_set),
            "labels": dict(per_label),
        }

    return Statistics(
        n=n,
        label_set=label_set,
        label_counts=label_counts,
        predictions=predictions,
        # Pooled micro precision/recall both equal accuracy for single-label
        # argmax classification; AUCs use the frequency-weighted mean.
        precision=averaged(per_label_precision, micro=accuracy),
        recall=averaged(per_label_recall, micro=accuracy),
        pr_auc=averaged(per_label_pr),
        roc_auc=averaged(per_label_roc),
        thresholds=thresholds,
    )


def statistics_from_doc(doc: dict, label_set) -> Statistics:
    """Rebuild Statistics from its JSON document form."""
    label_set = tuple(label_set)
    by_key = {json_label(label): label for label in label_set}

    def relabel(mapping):
        return {by_key[k]: v for k, v in mapping.items()}

    def metric(metric_doc):
        return {
            "micro": metric_doc["micro"],
            "macro": metric_doc["macro"],
            "labels": relabel(metric_doc["labels"]),
        }

    return Statistics(
        n=doc["counts"]["n"],
        label_set=label_set,
        label_counts=relabel(doc["counts"]["labels"]),
        predictions={
            by_key[actual]: relabel(row)
            for actual, row in doc["counts"]["predictions"].items()
        },
        precision=metric(doc["precision"]),
        recall=metric(doc["recall"]),
        pr_auc=metric(doc["pr_auc"]),
        roc_auc=metric(doc["roc_auc"]),
        thresholds={
            by_key[label]: ThresholdTable.from_doc(rows)
            for label, rows in doc["thresholds"].items()
        },
    )
