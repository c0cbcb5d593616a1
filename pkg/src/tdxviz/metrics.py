"""Classification metrics in the table conventions used throughout.

Precision and recall are support-weighted averages over classes, reported
as percentages with one decimal. The F1 column is the harmonic mean of the
weighted precision and recall (not the weighted average of per-class F1
scores). Support weighting makes the recall column telescope to accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EmptyInputError

CSV_HEADER = "config_key,accuracy,precision,recall,f1"


def f1_harmonic(p: float, r: float) -> float:
    """Harmonic mean of two percentages; defined as 0 when both are 0."""
    if not 0.0 <= p <= 100.0 or not 0.0 <= r <= 100.0:
        raise ValueError(f"percentages must lie in [0, 100], got {(p, r)}")
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


@dataclass(frozen=True)
class MetricsRow:
    """One evaluated configuration: percentages rounded to one decimal."""

    config_key: str
    accuracy: float
    precision: float
    recall: float
    f1: float

    def __post_init__(self):
        for name in ("accuracy", "precision", "recall", "f1"):
            v = getattr(self, name)
            if not math.isnan(v) and not 0.0 <= v <= 100.0:
                raise ValueError(f"{name} must lie in [0, 100], got {v}")

    @property
    def failed(self) -> bool:
        return math.isnan(self.accuracy)


def failed_row(config_key: str) -> MetricsRow:
    nan = float("nan")
    return MetricsRow(config_key=str(config_key), accuracy=nan, precision=nan, recall=nan, f1=nan)


def compute_metrics(
    predictions: list[str],
    labels: list[str],
    classes: tuple[str, ...] | list[str],
    config_key: str = "",
) -> MetricsRow:
    """Accuracy plus support-weighted precision/recall/F1 as percentages.

    A class that was never predicted contributes precision 0 with its
    support weight. Weighted recall equals accuracy by construction:
    sum_c (n_c / N) * (tp_c / n_c) = sum_c tp_c / N.
    """
    if len(predictions) != len(labels):
        raise ValueError(f"got {len(predictions)} predictions for {len(labels)} labels")
    if not labels:
        raise EmptyInputError("cannot compute metrics over zero sequences")
    class_set = set(classes)
    for value in labels:
        if value not in class_set:
            raise ValueError(f"label {value!r} not in class list {tuple(classes)}")
    for value in predictions:
        if value not in class_set:
            raise ValueError(f"prediction {value!r} not in class list {tuple(classes)}")

    n = len(labels)
    correct = sum(1 for p, y in zip(predictions, labels) if p == y)
    weighted_precision = 0.0
    for cls in classes:
        support = sum(1 for y in labels if y == cls)
        if support == 0:
            continue
        predicted = sum(1 for p in predictions if p == cls)
        tp = sum(1 for p, y in zip(predictions, labels) if p == cls and y == cls)
        class_precision = tp / predicted if predicted else 0.0
        weighted_precision += (support / n) * class_precision

    accuracy = round(100.0 * correct / n, 1)
    precision = round(100.0 * weighted_precision, 1)
    recall = round(100.0 * correct / n, 1)  # telescoped weighted recall
    f1 = round(f1_harmonic(precision, recall), 1)
    return MetricsRow(
        config_key=str(config_key),
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
    )


def _format_value(v: float) -> str:
    return "nan" if math.isnan(v) else f"{v:.1f}"


def rows_to_csv(rows: list[MetricsRow]) -> str:
    """Render rows with the exact header and one-decimal fixed-point cells."""
    lines = [CSV_HEADER]
    for row in rows:
        lines.append(
            f"{row.config_key},{_format_value(row.accuracy)},{_format_value(row.precision)},"
            f"{_format_value(row.recall)},{_format_value(row.f1)}"
        )
    return "\n".join(lines) + "\n"
