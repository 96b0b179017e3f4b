"""Confusion matrices, precision/recall/F1 with macro and weighted averages,
and overlap-based event matching."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMatrixError, LengthMismatchError
from .gestures import CLASS_NAMES, N_CLASSES
from .postproc import GestureEvent


@dataclass
class ConfusionMatrix:
    """Square count matrix, rows = truth, columns = prediction."""

    counts: np.ndarray = field(
        default_factory=lambda: np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    )

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (N_CLASSES, N_CLASSES):
            raise ValueError(f"expected a {N_CLASSES}x{N_CLASSES} matrix")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def add(self, truth: int, pred: int, weight: int = 1) -> None:
        self.counts[truth, pred] += weight

    def __iadd__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        self.counts += other.counts
        return self


def score_timesteps(pred_seq, truth_seq) -> ConfusionMatrix:
    """Count (truth, prediction) pairs over two equal-length label sequences."""
    pred = np.asarray(pred_seq, dtype=np.int64)
    truth = np.asarray(truth_seq, dtype=np.int64)
    if len(pred) != len(truth):
        raise LengthMismatchError(
            f"prediction has {len(pred)} steps, truth has {len(truth)}"
        )
    flat = truth * N_CLASSES + pred
    counts = np.bincount(flat, minlength=N_CLASSES * N_CLASSES)
    return ConfusionMatrix(counts.reshape(N_CLASSES, N_CLASSES))


def _overlap(a_start: int, a_end: int, b_start: int, b_end: int) -> int:
    """Overlap of two half-open integer ranges."""
    return max(0, min(a_end, b_end) - max(a_start, b_start))


def match_events(
    pred_events: list[GestureEvent],
    truth_spans: list[tuple[int, int, int]],
) -> ConfusionMatrix:
    """Score event predictions against truth spans by maximal overlap.

    Each predicted event is assigned to the truth span it overlaps most
    (earliest span wins exact ties) and scores a (truth_class, pred_class)
    cell.  A prediction overlapping no span scores (null, pred_class); a
    truth span that attracted no prediction scores (truth_class, null).
    Spans are half-open (start, end, class) in prediction-step units.
    """
    cm = ConfusionMatrix()
    matched = [False] * len(truth_spans)
    for event in pred_events:
        e_start, e_end = event.start_step, event.end_step + 1
        best_idx, best_ov = -1, 0
        for idx, (s_start, s_end, _) in enumerate(truth_spans):
            ov = _overlap(e_start, e_end, s_start, s_end)
            if ov > best_ov:
                best_idx, best_ov = idx, ov
        if best_idx >= 0:
            matched[best_idx] = True
            cm.add(truth_spans[best_idx][2], int(event.kind))
        else:
            cm.add(0, int(event.kind))
    for idx, (_, _, kind) in enumerate(truth_spans):
        if not matched[idx]:
            cm.add(kind, 0)
    return cm


@dataclass
class Report:
    """Per-class and aggregate classification metrics for one matrix."""

    per_class: dict[str, dict[str, float]]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    accuracy: float

    def as_dict(self) -> dict:
        return {
            "per_class": self.per_class,
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
            "accuracy": self.accuracy,
        }


def metrics(cm: ConfusionMatrix) -> Report:
    """Precision, recall, F1 per class plus macro/weighted aggregates.

    Zero denominators yield 0 for the affected metric.  Macro averages run
    over classes with support (a truth count > 0) only; weighted averages
    weight by support, which makes weighted recall identical to accuracy.
    """
    if cm.total == 0:
        raise EmptyMatrixError("cannot score an empty confusion matrix")
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)

    precision = np.divide(tp, predicted, out=np.zeros(N_CLASSES), where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros(N_CLASSES), where=support > 0)
    pr_sum = precision + recall
    f1 = np.divide(2 * precision * recall, pr_sum, out=np.zeros(N_CLASSES), where=pr_sum > 0)

    with_support = support > 0
    macro_p = float(precision[with_support].mean())
    macro_r = float(recall[with_support].mean())
    macro_f = float(f1[with_support].mean())
    frac = support / support.sum()
    weighted_p = float((frac * precision).sum())
    weighted_r = float((frac * recall).sum())
    weighted_f = float((frac * f1).sum())
    accuracy = float(tp.sum() / counts.sum())

    per_class = {
        CLASS_NAMES[c]: {
            "precision": float(precision[c]),
            "recall": float(recall[c]),
            "f1": float(f1[c]),
            "support": int(support[c]),
        }
        for c in range(N_CLASSES)
    }
    return Report(
        per_class=per_class,
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f,
        weighted_precision=weighted_p,
        weighted_recall=weighted_r,
        weighted_f1=weighted_f,
        accuracy=accuracy,
    )
