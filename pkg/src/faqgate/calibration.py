"""ROC construction, trapezoidal AUC, and Youden-J threshold selection.

The operating threshold is chosen on a validation set and frozen; the frozen
config is the only thing the test/serve path will accept.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import kernels
from .embedding import EmbeddingProvider
from .errors import ConfigurationError, DegenerateInputError, ValidationError
from .faq import FaqIndex, batch_top1
from .metrics import confusion, metrics

CLINICAL, CASUAL = "clinical", "casual"


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist(), self.thresholds.tolist()))


def roc_curve(scores, labels) -> RocCurve:
    """ROC over candidate thresholds +inf, midpoints of distinct scores, -inf.

    Decision rule is score >= threshold -> positive, so the curve starts at
    (0,0) and ends at (1,1).  AUC is the trapezoidal area, which equals the
    pairwise ranking probability (ties counted half).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValidationError("scores and labels must be equal-length 1-D")
    if not np.all(np.isfinite(scores)):
        raise ValidationError("scores must be finite")
    n_pos = int(labels.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise DegenerateInputError("roc_curve needs at least one positive and one negative")

    distinct = np.unique(scores)
    mids = (distinct[:-1] + distinct[1:]) / 2 if distinct.size > 1 else np.empty(0)
    thresholds = np.concatenate(([np.inf], mids[::-1], [-np.inf]))

    tpr = np.empty(thresholds.size)
    fpr = np.empty(thresholds.size)
    for i, t in enumerate(thresholds):
        pred = scores >= t
        tpr[i] = np.count_nonzero(pred & labels) / n_pos
        fpr[i] = np.count_nonzero(pred & ~labels) / n_neg
    auc = kernels.trapezoid(np.ascontiguousarray(fpr), np.ascontiguousarray(tpr))
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auc=float(auc))


def youden_threshold(roc: RocCurve) -> tuple[float, float]:
    """Threshold maximizing J = tpr - fpr; ties resolve to the lowest threshold.

    Preferring the lower threshold keeps recall as high as the maximum of J
    allows: the dangerous error here is a clinical question falling through
    to small talk.
    """
    j = roc.tpr - roc.fpr
    best = float(np.max(j))
    candidates = roc.thresholds[j == best]
    return float(np.min(candidates)), best


@dataclass(frozen=True)
class ThresholdConfig:
    threshold: float
    domain: str
    model_fingerprint: str
    calibrated_at: str
    frozen: bool
    youden_j: float = 0.0
    auc: float = 0.0
    val_item_hashes: tuple[str, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "domain": self.domain,
            "model_fingerprint": self.model_fingerprint,
            "calibrated_at": self.calibrated_at,
            "frozen": self.frozen,
            "youden_j": self.youden_j,
            "auc": self.auc,
            "val_item_hashes": list(self.val_item_hashes),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ThresholdConfig":
        return cls(
            threshold=float(obj["threshold"]),
            domain=str(obj.get("domain", "")),
            model_fingerprint=str(obj["model_fingerprint"]),
            calibrated_at=str(obj.get("calibrated_at", "")),
            frozen=bool(obj["frozen"]),
            youden_j=float(obj.get("youden_j", 0.0)),
            auc=float(obj.get("auc", 0.0)),
            val_item_hashes=tuple(obj.get("val_item_hashes", ())),
        )


def save_config(config: ThresholdConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path: str) -> ThresholdConfig:
    with open(path, encoding="utf-8") as fh:
        return ThresholdConfig.from_dict(json.load(fh))


def score_texts(texts: list[str], index: FaqIndex, provider: EmbeddingProvider) -> np.ndarray:
    """Max-cosine score of each text against the index (query role)."""
    vectors = provider.embed(texts, role="query")
    scores, _ = batch_top1(np.stack(vectors), index)
    return scores


def calibrate(
    validation_set: list[tuple[str, str]],
    index: FaqIndex,
    provider: EmbeddingProvider,
    domain: str = "",
    calibrated_at: str | None = None,
) -> tuple[ThresholdConfig, dict]:
    """Pick the operating threshold on validation scores and freeze it.

    ``validation_set`` is (text, label) with labels "clinical"/"casual".
    Returns the frozen config plus a calibration report with the metrics at
    the chosen threshold.
    """
    if provider.fingerprint() != index.provider_fingerprint:
        raise ConfigurationError(
            "provider fingerprint does not match the index; rebuild the index"
        )
    labels = []
    for _, label in validation_set:
        label = label.strip().lower()
        if label not in (CLINICAL, CASUAL):
            raise ValidationError(f"unknown label {label!r}")
        labels.append(label == CLINICAL)
    texts = [text for text, _ in validation_set]
    scores = score_texts(texts, index, provider)
    roc = roc_curve(scores, labels)
    threshold, j = youden_threshold(roc)

    predictions = [bool(s >= threshold) for s in scores]
    report_metrics = metrics(confusion(predictions, labels, positive=True))

    item_hashes = tuple(sorted(hashlib.sha256(t.encode("utf-8")).hexdigest() for t in texts))
    if calibrated_at is None:
        calibrated_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    config = ThresholdConfig(
        threshold=threshold,
        domain=domain,
        model_fingerprint=index.provider_fingerprint,
        calibrated_at=calibrated_at,
        frozen=True,
        youden_j=j,
        auc=roc.auc,
        val_item_hashes=item_hashes,
    )
    report = {
        "domain": domain,
        "model_fingerprint": index.provider_fingerprint,
        "n_validation": len(validation_set),
        "threshold": threshold,
        "youden_j": j,
        "auc_roc": roc.auc,
        "metrics_at_threshold": report_metrics.to_dict(),
    }
    return config, report


def roc_points_csv(roc: RocCurve) -> str:
    lines = ["fpr,tpr,threshold"]
    for fpr, tpr, t in roc.points():
        if math.isinf(t):
            t_repr = "inf" if t > 0 else "-inf"
        else:
            t_repr = repr(t)
        lines.append(f"{fpr!r},{tpr!r},{t_repr}")
    return "\n".join(lines) + "\n"
