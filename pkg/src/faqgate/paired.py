"""Paired-classifier statistics: exact McNemar, Holm step-down, Cohen's h.

The McNemar test is the exact two-sided binomial form.  Discordant counts in
this setting are small (sometimes zero on one side), where the chi-square
approximation is invalid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ContractViolationError, ValidationError


@dataclass(frozen=True)
class PairedOutcome:
    b: int              # model-1-only correct
    c: int              # model-2-only correct
    both_correct: int
    both_wrong: int

    @property
    def n(self) -> int:
        return self.b + self.c + self.both_correct + self.both_wrong


@dataclass(frozen=True)
class ComparisonResult:
    model1: str
    model2: str
    b: int
    c: int
    p_raw: float
    p_holm: float
    cohens_h: float

    def to_dict(self) -> dict:
        return {
            "model1": self.model1,
            "model2": self.model2,
            "b": self.b,
            "c": self.c,
            "p_raw": self.p_raw,
            "p_holm": self.p_holm,
            "cohens_h": self.cohens_h,
        }


def discordants(preds1: list, preds2: list, truths: list) -> PairedOutcome:
    """Tally the four concordance cells of two prediction vectors against truth."""
    if not (len(preds1) == len(preds2) == len(truths)):
        raise ContractViolationError(
            f"length mismatch: {len(preds1)}, {len(preds2)}, {len(truths)}"
        )
    b = c = both_correct = both_wrong = 0
    for p1, p2, t in zip(preds1, preds2, truths):
        ok1 = p1 == t
        ok2 = p2 == t
        if ok1 and ok2:
            both_correct += 1
        elif ok1:
            b += 1
        elif ok2:
            c += 1
        else:
            both_wrong += 1
    return PairedOutcome(b=b, c=c, both_correct=both_correct, both_wrong=both_wrong)


def mcnemar_exact(b: int, c: int) -> float:
    """Two-sided exact binomial McNemar p-value on discordant counts.

    m = b + c; p = min(1, 2 * sum_{i<=min(b,c)} C(m,i) / 2^m).  Computed in
    exact rational arithmetic, converted to float at the end.
    """
    if b < 0 or c < 0:
        raise ValidationError("discordant counts must be nonnegative")
    m = b + c
    if m == 0:
        return 1.0
    k = min(b, c)
    tail = sum(math.comb(m, i) for i in range(k + 1))
    p = 2 * Fraction(tail, 1 << m)
    return float(min(Fraction(1), p))


def holm_adjust(p_values: list[float], family_size: int | None = None) -> list[float]:
    """Holm step-down adjustment, returned in the original input order.

    ``family_size`` widens the correction family beyond the p-values given
    (never narrows it); the default family is exactly the supplied list.
    """
    if not p_values:
        raise ValidationError("holm_adjust requires at least one p-value")
    for p in p_values:
        if not 0 < p <= 1:
            raise ValidationError(f"p-values must be in (0,1], got {p}")
    m = max(len(p_values), family_size or 0)
    order = sorted(range(len(p_values)), key=lambda i: p_values[i])
    adjusted = [0.0] * len(p_values)
    running = 0.0
    for rank, i in enumerate(order):
        running = max(running, min(1.0, (m - rank) * p_values[i]))
        adjusted[i] = running
    return adjusted


def cohens_h(p1: float, p2: float) -> float:
    """Effect size for two proportions: 2*arcsin(sqrt(p1)) - 2*arcsin(sqrt(p2))."""
    for p in (p1, p2):
        if not 0 <= p <= 1:
            raise ValidationError(f"proportions must be in [0,1], got {p}")
    return 2 * math.asin(math.sqrt(p1)) - 2 * math.asin(math.sqrt(p2))


def compare_all(predictions: dict[str, list], truths: list,
                family_size: int | None = None) -> list[ComparisonResult]:
    """All pairwise McNemar comparisons with one Holm family across the pairs.

    ``predictions`` maps model name -> label vector aligned with ``truths``.
    """
    names = sorted(predictions)
    if len(names) < 2:
        raise ValidationError("need at least two models to compare")
    pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1 :]]
    rows = []
    for m1, m2 in pairs:
        out = discordants(predictions[m1], predictions[m2], truths)
        rows.append((m1, m2, out))
    p_raw = [mcnemar_exact(out.b, out.c) for _, _, out in rows]
    p_holm = holm_adjust(p_raw, family_size=family_size)
    results = []
    for (m1, m2, out), praw, pholm in zip(rows, p_raw, p_holm):
        acc1 = (out.b + out.both_correct) / out.n
        acc2 = (out.c + out.both_correct) / out.n
        results.append(
            ComparisonResult(
                model1=m1, model2=m2, b=out.b, c=out.c,
                p_raw=praw, p_holm=pholm, cohens_h=cohens_h(acc1, acc2),
            )
        )
    return results
