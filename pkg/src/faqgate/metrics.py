"""Confusion-matrix metrics and Wilson confidence intervals.

Clinical is the positive class throughout.  Metrics that are undefined for a
given matrix (e.g. precision with an empty predicted-positive set) are
reported as an explicit ``None`` marker, never coerced to 0 or NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist

from .errors import ContractViolationError, ValidationError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValidationError("confusion counts must be nonnegative")

    @property
    def n(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float | None
    recall: float | None
    specificity: float | None
    balanced_accuracy: float | None
    f1: float | None
    misclassifications: int

    def to_dict(self) -> dict:
        def mark(x):
            return "undefined" if x is None else x

        return {
            "accuracy": self.accuracy,
            "precision": mark(self.precision),
            "recall": mark(self.recall),
            "specificity": mark(self.specificity),
            "balanced_accuracy": mark(self.balanced_accuracy),
            "f1": mark(self.f1),
            "misclassifications": self.misclassifications,
        }


def confusion(predictions: list, truths: list, positive=True) -> ConfusionMatrix:
    """Tally the four cells. Labels are compared against ``positive``."""
    if len(predictions) != len(truths):
        raise ContractViolationError(
            f"length mismatch: {len(predictions)} predictions vs {len(truths)} truths"
        )
    if not predictions:
        raise ValidationError("cannot tabulate zero items")
    tp = fn = fp = tn = 0
    for pred, truth in zip(predictions, truths):
        p = pred == positive
        t = truth == positive
        if t and p:
            tp += 1
        elif t and not p:
            fn += 1
        elif not t and p:
            fp += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn)


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    if cm.n == 0:
        raise ValidationError("metrics require at least one item")
    accuracy = (cm.tp + cm.tn) / cm.n
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else None
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else None
    specificity = cm.tn / (cm.tn + cm.fp) if cm.tn + cm.fp > 0 else None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = None
    if recall is not None and specificity is not None:
        balanced = (recall + specificity) / 2
    else:
        balanced = None
    return MetricsReport(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        specificity=specificity,
        balanced_accuracy=balanced,
        f1=f1,
        misclassifications=cm.fp + cm.fn,
    )


def wilson_ci(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    z is the exact two-sided quantile (1.959964... at 95%), not 1.96 rounded;
    rounding belongs at presentation time.
    """
    if not 0 < confidence < 1:
        raise ValidationError(f"confidence must be in (0,1), got {confidence}")
    if n <= 0:
        raise ValidationError("n must be positive")
    if not 0 <= successes <= n:
        raise ValidationError(f"successes must be in [0, {n}], got {successes}")
    z = NormalDist().inv_cdf((1 + confidence) / 2)
    p_hat = successes / n
    z2 = z * z
    denom = 1 + z2 / n
    center = (p_hat + z2 / (2 * n)) / denom
    half = z * ((p_hat * (1 - p_hat) / n + z2 / (4 * n * n)) ** 0.5) / denom
    # the bounds are algebraically exact at the extremes; clear the fp residue
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == n else min(1.0, center + half)
    return lo, hi
