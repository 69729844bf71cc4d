"""ROC curve, AUROC, thresholded accuracy and the rank transform.

AUROC is the Mann-Whitney statistic: the fraction of (positive, negative)
pairs ordered correctly, ties counting one half. It is computed exactly from
integer pair counts, so it does not depend on the backend or on row order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._backend import kernels
from .errors import DegenerateLabelsError, EmptyInputError
from .store import LabelTable, PredictionTable


@dataclass(frozen=True)
class RocCurve:
    """Points (fpr, tpr, threshold), predicting positive when score >= threshold.

    Starts at (0, 0) with threshold +inf and ends at (1, 1) with threshold -inf.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def __len__(self):
        return int(self.fpr.size)

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist()))

    def area(self) -> float:
        """Trapezoidal area under the curve."""
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1])) / 2.0)


@dataclass(frozen=True)
class MetricRow:
    name: str
    dev_auroc: float
    test_auroc: Optional[float] = None
    accuracy: Optional[float] = None


@dataclass(frozen=True)
class MetricReport:
    rows: tuple[MetricRow, ...]

    def row(self, name: str) -> MetricRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def render(self) -> str:
        """Plain-text table, values as percentages with two decimals."""

        def pct(v):
            return "-" if v is None else f"{100.0 * v:.2f}"

        header = ("Model", "Dev AUROC", "Test AUROC", "Accuracy")
        body = [(r.name, pct(r.dev_auroc), pct(r.test_auroc), pct(r.accuracy)) for r in self.rows]
        widths = [max(len(row[i]) for row in [header, *body]) for i in range(4)]
        lines = []
        for row in [header, *body]:
            cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
            lines.append("  ".join(cells).rstrip())
        return "\n".join(lines) + "\n"


def _paired(scores: PredictionTable, labels: LabelTable) -> tuple[np.ndarray, np.ndarray]:
    y = labels.for_table(scores)
    return scores.scores, y


def _check_classes(y: np.ndarray) -> None:
    n_pos = int(np.count_nonzero(y))
    if n_pos == 0 or n_pos == y.size:
        raise DegenerateLabelsError(
            f"AUROC needs both classes; got {n_pos} positives and {y.size - n_pos} negatives"
        )


def auroc(scores: PredictionTable, labels: LabelTable) -> float:
    s, y = _paired(scores, labels)
    _check_classes(y)
    return float(kernels.auroc(s, y))


def auroc_arrays(scores, y) -> float:
    """AUROC for raw arrays; ``y`` holds 0/1 labels in the same order as ``scores``."""
    y = np.asarray(y, dtype=np.uint8)
    _check_classes(y)
    return float(kernels.auroc(np.asarray(scores, dtype=np.float64), y))


def roc_curve(scores: PredictionTable, labels: LabelTable) -> RocCurve:
    s, y = _paired(scores, labels)
    _check_classes(y)
    n_pos = int(np.count_nonzero(y))
    n_neg = y.size - n_pos
    order = np.argsort(-s, kind="stable")
    s_desc, y_desc = s[order], y[order].astype(np.int64)
    # last index of each run of equal scores
    last = np.r_[np.flatnonzero(s_desc[1:] != s_desc[:-1]), s_desc.size - 1]
    tp = np.cumsum(y_desc)[last]
    fp = (last + 1) - tp
    fpr = np.r_[0.0, fp / n_neg, 1.0]
    tpr = np.r_[0.0, tp / n_pos, 1.0]
    thresholds = np.r_[np.inf, s_desc[last], -np.inf]
    return RocCurve(fpr, tpr, thresholds)


def accuracy(scores: PredictionTable, labels: LabelTable, threshold: float = 0.5) -> float:
    """Fraction of rows where (score >= threshold) agrees with the label."""
    s, y = _paired(scores, labels)
    predicted = (s >= threshold).astype(np.uint8)
    return int(np.count_nonzero(predicted == y)) / y.size


def rank_transform(scores: PredictionTable) -> PredictionTable:
    """Replace scores by (midrank - 1) / (n - 1); a single row maps to 0.5."""
    if len(scores) == 0:
        raise EmptyInputError("cannot rank an empty table")
    return scores.with_scores(kernels.midranks(scores.scores))
