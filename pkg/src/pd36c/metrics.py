"""Confusion-matrix construction and the evaluation-metric suite.

Covers per-class precision/recall/F1 with one-vs-rest marginals, overall
accuracy, macro and support-weighted averages, balanced accuracy (macro
recall), the multiclass Matthews correlation coefficient in covariance
form, Cohen's kappa, macro one-vs-rest AUC with 0.5 tie credit, and the
top-2 confidence-margin rows used for ambiguity analysis.

Zero denominators never produce NaN: the affected value is 0 and the
degeneracy is flagged, so aggregates stay finite.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError


@dataclass(frozen=True)
class ConfusionMatrix:
    """C x C counts; rows are true classes, columns predicted classes."""

    counts: np.ndarray
    labels: tuple[str, ...]

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def confusion(y_true, y_pred, num_classes: int, labels=None) -> ConfusionMatrix:
    """Count (true, predicted) pairs into a C x C matrix."""
    y_true = np.asarray(y_true, dtype=np.intp)
    y_pred = np.asarray(y_pred, dtype=np.intp)
    if y_true.shape != y_pred.shape:
        raise ShapeError(
            f"y_true has {y_true.shape[0]} entries but y_pred has {y_pred.shape[0]}"
        )
    if y_true.size and not (
        0 <= y_true.min()
        and y_true.max() < num_classes
        and 0 <= y_pred.min()
        and y_pred.max() < num_classes
    ):
        raise DataError(f"class labels out of range [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    if labels is None:
        labels = tuple(str(i) for i in range(num_classes))
    return ConfusionMatrix(counts, tuple(labels))


@dataclass(frozen=True)
class PerClassMetrics:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    degenerate: np.ndarray  # classes where a zero denominator forced a 0


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    return np.divide(num, den, out=np.zeros_like(num, dtype=np.float64), where=den > 0)


def per_class(cm: ConfusionMatrix) -> PerClassMetrics:
    """One-vs-rest precision, recall, and F1 per class."""
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    support = counts.sum(axis=1)
    precision = _safe_div(tp, predicted)
    recall = _safe_div(tp, support)
    f1 = _safe_div(2.0 * precision * recall, precision + recall)
    degenerate = (predicted == 0) | (support == 0) | (precision + recall == 0)
    return PerClassMetrics(precision, recall, f1, cm.counts.sum(axis=1), degenerate)


@dataclass(frozen=True)
class Aggregates:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    balanced_accuracy: float
    mcc: float
    kappa: float
    degenerate: tuple[str, ...]  # which of mcc/kappa hit the zero convention


def aggregate(cm: ConfusionMatrix, pc: PerClassMetrics | None = None) -> Aggregates:
    """Whole-matrix summary statistics.

    MCC uses the covariance form over the full matrix; kappa corrects
    observed agreement by the chance agreement implied by the marginals.
    """
    total = cm.total
    if total == 0:
        raise DataError("cannot aggregate an empty confusion matrix")
    if pc is None:
        pc = per_class(cm)
    counts = cm.counts.astype(np.float64)
    trace = float(np.trace(counts))
    accuracy = trace / total
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    weights = support / total

    macro_precision = float(pc.precision.mean())
    macro_recall = float(pc.recall.mean())
    macro_f1 = float(pc.f1.mean())
    weighted_precision = float((weights * pc.precision).sum())
    weighted_recall = float((weights * pc.recall).sum())
    weighted_f1 = float((weights * pc.f1).sum())

    degenerate = []
    s = float(total)
    cov_tp = trace * s - float(support @ predicted)
    denom = np.sqrt(s * s - float(predicted @ predicted)) * np.sqrt(
        s * s - float(support @ support)
    )
    if denom > 0:
        mcc = cov_tp / denom
    else:
        mcc = 0.0
        degenerate.append("mcc")
    p_e = float(support @ predicted) / (s * s)
    if 1.0 - p_e != 0.0:
        kappa = (accuracy - p_e) / (1.0 - p_e)
    else:
        kappa = 0.0
        degenerate.append("kappa")

    return Aggregates(
        accuracy=accuracy,
        macro_precision=macro_precision,
        macro_recall=macro_recall,
        macro_f1=macro_f1,
        weighted_precision=weighted_precision,
        weighted_recall=weighted_recall,
        weighted_f1=weighted_f1,
        balanced_accuracy=macro_recall,
        mcc=float(mcc),
        kappa=float(kappa),
        degenerate=tuple(degenerate),
    )


def _average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their rank span."""
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=np.float64)
    sorted_x = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _binary_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """P(score of a positive > score of a negative), ties counted 0.5."""
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    ranks = _average_ranks(scores)
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def macro_auc(score_rows: np.ndarray, y_true) -> tuple[float, tuple[int, ...]]:
    """Macro one-vs-rest ranking AUC over classes with both outcomes present.

    Returns ``(auc, excluded)`` where ``excluded`` lists class indices that
    had no positives or no negatives and were left out of the mean.
    """
    score_rows = np.asarray(score_rows, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.intp)
    if score_rows.ndim != 2 or score_rows.shape[0] != y_true.shape[0]:
        raise ShapeError(
            f"score rows {score_rows.shape} do not match {y_true.shape[0]} labels"
        )
    num_classes = score_rows.shape[1]
    present = np.unique(y_true)
    if present.size < 2:
        raise DataError("macro AUC needs at least two classes present")
    aucs = []
    excluded = []
    n = len(y_true)
    for c in range(num_classes):
        positive = y_true == c
        n_pos = int(positive.sum())
        if n_pos == 0 or n_pos == n:
            excluded.append(c)
            continue
        aucs.append(_binary_auc(score_rows[:, c], positive))
    return float(np.mean(aucs)), tuple(excluded)


@dataclass(frozen=True)
class MarginRow:
    """Top-2 confidence geometry for one prediction."""

    c_true: float
    c_best: float
    c_second: float
    margin: float  # c_true - c_second; near zero marks top-2 ambiguity
    correct: bool


def margins(score_rows: np.ndarray, y_true) -> list[MarginRow]:
    """Extract (c_true, c_best, c_second, margin, correct) per row."""
    score_rows = np.asarray(score_rows, dtype=np.float64)
    y_true = np.asarray(y_true, dtype=np.intp)
    if score_rows.ndim != 2 or score_rows.shape[1] < 2:
        raise ShapeError(f"margins need (N, C >= 2) score rows, got {score_rows.shape}")
    rows = []
    for scores, t in zip(score_rows, y_true):
        top2 = np.partition(scores, len(scores) - 2)[-2:]
        c_best = float(top2[1])
        c_second = float(top2[0])
        c_true = float(scores[t])
        correct = int(np.argmax(scores)) == int(t)
        rows.append(MarginRow(c_true, c_best, c_second, c_true - c_second, correct))
    return rows


@dataclass(frozen=True)
class MetricsReport:
    """Everything the evaluation surfaces: per-class rows plus aggregates."""

    labels: tuple[str, ...]
    per_class_metrics: PerClassMetrics
    aggregates: Aggregates
    macro_auc: float | None = None
    auc_excluded: tuple[int, ...] = ()


def compute_report(
    cm: ConfusionMatrix, score_rows: np.ndarray | None = None, y_true=None
) -> MetricsReport:
    """Assemble the full report; AUC is included when scores are provided."""
    pc = per_class(cm)
    agg = aggregate(cm, pc)
    auc = None
    excluded: tuple[int, ...] = ()
    if score_rows is not None:
        if y_true is None:
            raise DataError("score rows require the matching y_true labels")
        auc, excluded = macro_auc(score_rows, y_true)
    return MetricsReport(cm.labels, pc, agg, auc, excluded)


# ---------------------------------------------------------------------------
# export


def format_report(report: MetricsReport) -> str:
    """Aligned text table: per-class rows, then accuracy / macro / weighted."""
    pc = report.per_class_metrics
    agg = report.aggregates
    name_width = max(len(label) for label in report.labels)
    name_width = max(name_width, len("weighted avg")) + 2
    lines = [f"{'Nr':>4} {'class':<{name_width}}{'precision':>10} {'recall':>10} {'f1_score':>10}"]
    for i, label in enumerate(report.labels):
        flag = " *" if pc.degenerate[i] else ""
        lines.append(
            f"{i:>4} {label:<{name_width}}{pc.precision[i]:>10.5f} "
            f"{pc.recall[i]:>10.5f} {pc.f1[i]:>10.5f}{flag}"
        )
    pad = f"{'':>4} "
    lines.append(f"{pad}{'accuracy':<{name_width}}{'':>10} {'':>10} {agg.accuracy:>10.5f}")
    lines.append(
        f"{pad}{'macro avg':<{name_width}}{agg.macro_precision:>10.5f} "
        f"{agg.macro_recall:>10.5f} {agg.macro_f1:>10.5f}"
    )
    lines.append(
        f"{pad}{'weighted avg':<{name_width}}{agg.weighted_precision:>10.5f} "
        f"{agg.weighted_recall:>10.5f} {agg.weighted_f1:>10.5f}"
    )
    lines.append("")
    lines.append(f"balanced accuracy: {agg.balanced_accuracy:.5f}")
    lines.append(f"MCC: {agg.mcc:.5f}")
    lines.append(f"Cohen's kappa: {agg.kappa:.5f}")
    if report.macro_auc is not None:
        lines.append(f"macro AUC: {report.macro_auc:.5f}")
    if pc.degenerate.any():
        lines.append("* zero-denominator convention applied")
    if agg.degenerate:
        lines.append(f"degenerate aggregates: {', '.join(agg.degenerate)}")
    return "\n".join(lines)


def report_to_dict(report: MetricsReport) -> dict:
    pc = report.per_class_metrics
    agg = report.aggregates
    out = {
        "per_class": [
            {
                "index": i,
                "class": label,
                "precision": float(pc.precision[i]),
                "recall": float(pc.recall[i]),
                "f1_score": float(pc.f1[i]),
                "support": int(pc.support[i]),
                "degenerate": bool(pc.degenerate[i]),
            }
            for i, label in enumerate(report.labels)
        ],
        "accuracy": agg.accuracy,
        "macro_avg": {
            "precision": agg.macro_precision,
            "recall": agg.macro_recall,
            "f1_score": agg.macro_f1,
        },
        "weighted_avg": {
            "precision": agg.weighted_precision,
            "recall": agg.weighted_recall,
            "f1_score": agg.weighted_f1,
        },
        "balanced_accuracy": agg.balanced_accuracy,
        "mcc": agg.mcc,
        "kappa": agg.kappa,
        "degenerate_aggregates": list(agg.degenerate),
    }
    if report.macro_auc is not None:
        out["macro_auc"] = report.macro_auc
        out["auc_excluded_classes"] = list(report.auc_excluded)
    return out


def report_to_json(report: MetricsReport) -> str:
    return json.dumps(report_to_dict(report), indent=2)


def margins_to_csv(rows: list[MarginRow]) -> str:
    buf = io.StringIO()
    buf.write("c_true,c_best,c_second,margin,correct\n")
    for r in rows:
        buf.write(f"{r.c_true!r},{r.c_best!r},{r.c_second!r},{r.margin!r},{int(r.correct)}\n")
    return buf.getvalue()


def confusion_to_csv(cm: ConfusionMatrix) -> str:
    buf = io.StringIO()
    buf.write("true\\pred," + ",".join(cm.labels) + "\n")
    for label, row in zip(cm.labels, cm.counts):
        buf.write(label + "," + ",".join(str(int(v)) for v in row) + "\n")
    return buf.getvalue()
