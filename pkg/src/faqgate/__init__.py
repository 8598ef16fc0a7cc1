"""faqgate: local-first dialogue routing by FAQ similarity with a calibrated gate.

Clinical inputs get the curated answer verbatim; casual inputs go to a
constrained small-talk backend.  The package also ships the calibration,
statistics, and energy-accounting toolchain around that gate.
"""

from .calibration import ThresholdConfig, calibrate, roc_curve, youden_threshold
from .embedding import EmbeddingProviderSpec, cosine, make_provider, normalize, toy_embed
from .faq import AnswerStore, FaqEntry, FaqIndex, build_index, ingest_faq, top_match
from .gate import RouteDecision, Router, TokenBucketLimiter
from .metrics import ConfusionMatrix, confusion, metrics, wilson_ci
from .paired import cohens_h, discordants, holm_adjust, mcnemar_exact
from .energy import EnergyReport, PowerSample, integrate_trace, per_request

__version__ = "0.1.0"

__all__ = [
    "AnswerStore",
    "ConfusionMatrix",
    "EmbeddingProviderSpec",
    "EnergyReport",
    "FaqEntry",
    "FaqIndex",
    "PowerSample",
    "RouteDecision",
    "Router",
    "ThresholdConfig",
    "TokenBucketLimiter",
    "build_index",
    "calibrate",
    "cohens_h",
    "confusion",
    "cosine",
    "discordants",
    "holm_adjust",
    "ingest_faq",
    "integrate_trace",
    "make_provider",
    "mcnemar_exact",
    "metrics",
    "normalize",
    "per_request",
    "roc_curve",
    "top_match",
    "toy_embed",
    "wilson_ci",
    "youden_threshold",
]
