"""Classification metrics: confusion matrix and precision/recall/F1 tables.

Zero-division convention: a class never predicted has precision 0, a class
with no true samples has recall 0, and F1 is 0 whenever precision + recall
is 0. Averages come in unweighted (macro) and support-weighted forms.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError


@dataclass(frozen=True)
class ClassMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    support: int


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Counts with rows = true class, columns = predicted class."""
    t = np.asarray(y_true, dtype=np.intp)
    p = np.asarray(y_pred, dtype=np.intp)
    if t.shape != p.shape:
        raise ShapeError(f"y_true {t.shape} and y_pred {p.shape} differ in length")
    if t.size == 0:
        raise ParameterError("cannot build a confusion matrix from zero samples")
    if t.min() < 0 or t.max() >= n_classes or p.min() < 0 or p.max() >= n_classes:
        raise ParameterError(f"class index outside [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def accuracy_from_confusion(cm: np.ndarray) -> float:
    return float(np.trace(cm)) / float(cm.sum())


def per_class_metrics(cm: np.ndarray, labels: list[str]) -> list[ClassMetrics]:
    if cm.shape[0] != cm.shape[1] or cm.shape[0] != len(labels):
        raise ShapeError("confusion matrix and label list sizes disagree")
    out = []
    for c, label in enumerate(labels):
        tp = float(cm[c, c])
        predicted = float(cm[:, c].sum())
        actual = float(cm[c, :].sum())
        precision = tp / predicted if predicted > 0 else 0.0
        recall = tp / actual if actual > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        out.append(
            ClassMetrics(
                label=label, precision=precision, recall=recall, f1=f1, support=int(actual)
            )
        )
    return out


def macro_average(metrics: list[ClassMetrics]) -> tuple[float, float, float]:
    """Unweighted mean of per-class precision, recall, F1."""
    n = len(metrics)
    if n == 0:
        raise ParameterError("no classes to average")
    return (
        sum(m.precision for m in metrics) / n,
        sum(m.recall for m in metrics) / n,
        sum(m.f1 for m in metrics) / n,
    )


def weighted_average(metrics: list[ClassMetrics]) -> tuple[float, float, float]:
    """Support-weighted mean of per-class precision, recall, F1."""
    total = sum(m.support for m in metrics)
    if total == 0:
        raise ParameterError("zero total support")
    return (
        sum(m.precision * m.support for m in metrics) / total,
        sum(m.recall * m.support for m in metrics) / total,
        sum(m.f1 * m.support for m in metrics) / total,
    )


@dataclass
class EvalReport:
    accuracy: float
    confusion: np.ndarray
    per_class: list[ClassMetrics]
    labels: list[str]

    @property
    def n_samples(self) -> int:
        return int(self.confusion.sum())

    def macro(self) -> tuple[float, float, float]:
        return macro_average(self.per_class)

    def weighted(self) -> tuple[float, float, float]:
        return weighted_average(self.per_class)

    def to_dict(self) -> dict:
        mp, mr, mf = self.macro()
        wp, wr, wf = self.weighted()
        return {
            "accuracy": self.accuracy,
            "n_samples": self.n_samples,
            "per_class": [
                {
                    "label": m.label,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for m in self.per_class
            ],
            "macro": {"precision": mp, "recall": mr, "f1": mf},
            "weighted": {"precision": wp, "recall": wr, "f1": wf},
        }

    def table(self) -> str:
        """Human-readable per-class table with macro and weighted rows."""
        width = max([len(m.label) for m in self.per_class] + [len("weighted avg")])
        lines = [f"{'':{width}}  precision  recall  f1-score  support"]
        for m in self.per_class:
            lines.append(
                f"{m.label:{width}}  {m.precision:9.2f}  {m.recall:6.2f}  "
                f"{m.f1:8.2f}  {m.support:7d}"
            )
        mp, mr, mf = self.macro()
        wp, wr, wf = self.weighted()
        total = sum(m.support for m in self.per_class)
        lines.append("")
        lines.append(
            f"{'accuracy':{width}}  {'':9}  {'':6}  {self.accuracy:8.2f}  {total:7d}"
        )
        lines.append(
            f"{'macro avg':{width}}  {mp:9.2f}  {mr:6.2f}  {mf:8.2f}  {total:7d}"
        )
        lines.append(
            f"{'weighted avg':{width}}  {wp:9.2f}  {wr:6.2f}  {wf:8.2f}  {total:7d}"
        )
        return "\n".join(lines)


def evaluate_predictions(y_true, y_pred, labels: list[str]) -> EvalReport:
    cm = confusion_matrix(y_true, y_pred, len(labels))
    return EvalReport(
        accuracy=accuracy_from_confusion(cm),
        confusion=cm,
        per_class=per_class_metrics(cm, labels),
        labels=list(labels),
    )


def write_confusion_csv(cm: np.ndarray, labels: list[str], path) -> None:
    """Grid with label headers: first row predicted labels, first column true."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow([""] + list(labels))
        for label, row in zip(labels, cm):
            writer.writerow([label] + [int(v) for v in row])
