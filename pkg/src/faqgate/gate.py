"""The routing gate: score, compare to the frozen threshold, answer or delegate.

Clinical decisions return the stored answer byte-for-byte and never touch the
generation backend.  Safety taps (content filter, rate limit, audit log) wrap
the decision; filters run before scoring so blocked text never reaches the
embedder or the log.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .calibration import ThresholdConfig
from .embedding import EmbeddingProvider
from .errors import ConfigurationError, DegenerateInputError
from .faq import AnswerStore, FaqIndex, top_match
from .smalltalk import GenerationParams, SmalltalkPolicy, generate

CLINICAL = "Clinical"
CASUAL = "Casual"

FALLBACK_REPLY = "I'm here with you; a member of staff can help with anything urgent."
REFUSAL_REPLY = "I can't help with that request."


@dataclass(frozen=True)
class RouteDecision:
    input_text: str
    score: float | None
    label: str | None
    matched_entry_id: str | None
    answer_text: str | None
    reply_source: str  # faq_verbatim | smalltalk | blocked
    latency_s: float
    matched_question: str | None = None
    degraded: bool = False
    blocked_reason: str | None = None


def decide(
    text: str,
    index: FaqIndex,
    answers: AnswerStore,
    config: ThresholdConfig,
    provider: EmbeddingProvider,
    smalltalk_backend,
    params: GenerationParams | None = None,
    policy: SmalltalkPolicy | None = None,
) -> RouteDecision:
    """Route one utterance. The only text normalization is a whitespace trim."""
    if not config.frozen:
        raise ConfigurationError("refusing to route with an unfrozen threshold config")
    if config.model_fingerprint != index.provider_fingerprint:
        raise ConfigurationError(
            "threshold config fingerprint does not match the index; refusing to serve"
        )
    trimmed = text.strip()
    if not trimmed:
        raise DegenerateInputError("empty input")
    params = params or GenerationParams()
    policy = policy or SmalltalkPolicy()

    started = time.perf_counter()
    query = provider.embed_one(trimmed, role="query")
    best = top_match(query, index, k=1)[0]
    if best.score >= config.threshold:  # boundary goes clinical: safety-first
        entry = index.entry(best.entry_id)
        return RouteDecision(
            input_text=trimmed,
            score=best.score,
            label=CLINICAL,
            matched_entry_id=entry.entry_id,
            matched_question=entry.question,
            answer_text=answers.text(entry.answer_id),
            reply_source="faq_verbatim",
            latency_s=time.perf_counter() - started,
        )
    try:
        reply = generate(trimmed, params, policy, smalltalk_backend)
        degraded = False
    except Exception:
        reply = FALLBACK_REPLY
        degraded = True
    return RouteDecision(
        input_text=trimmed,
        score=best.score,
        label=CASUAL,
        matched_entry_id=None,
        matched_question=None,
        answer_text=reply,
        reply_source="smalltalk",
        latency_s=time.perf_counter() - started,
        degraded=degraded,
    )


# ---------------------------------------------------------------------------
# content filter
# ---------------------------------------------------------------------------

class ContentFilter:
    """Whole-word, case-insensitive denylist matching, compiled at load time."""

    def __init__(self, patterns: list[str]):
        self._compiled: list[tuple[str, re.Pattern]] = []
        for pattern in patterns:
            try:
                self._compiled.append(
                    (pattern, re.compile(rf"\b(?:{pattern})\b", re.IGNORECASE))
                )
            except re.error as exc:
                raise ConfigurationError(f"malformed denylist pattern {pattern!r}: {exc}")

    def check(self, text: str) -> str | None:
        """Return the matching pattern, or None when the text passes."""
        for pattern, rx in self._compiled:
            if rx.search(text):
                return pattern
        return None


def load_denylist(path: str) -> ContentFilter:
    """Plain-text file, one pattern per line, '#' starts a comment."""
    patterns = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                patterns.append(line)
    return ContentFilter(patterns)


def content_filter(text: str, denylist: ContentFilter) -> tuple[str, str | None]:
    """("pass", None) or ("blocked", reason)."""
    reason = denylist.check(text)
    return ("blocked", reason) if reason is not None else ("pass", None)


# ---------------------------------------------------------------------------
# rate limiting
# ---------------------------------------------------------------------------

@dataclass
class _Bucket:
    tokens: float
    updated: float


class TokenBucketLimiter:
    """Per-session token buckets: capacity C, refill R tokens/s.

    Deterministic given (state, now); pass ``now`` explicitly in tests.
    """

    def __init__(self, capacity: float, refill_per_s: float):
        if capacity < 1 or refill_per_s <= 0:
            raise ConfigurationError("limiter needs capacity >= 1 and refill > 0")
        self.capacity = float(capacity)
        self.refill_per_s = float(refill_per_s)
        self._buckets: dict[str, _Bucket] = {}
        self._lock = threading.Lock()

    def check(self, session_id: str, now: float | None = None) -> tuple[str, float]:
        """("allow", 0.0) or ("throttle", retry_after_s)."""
        if now is None:
            now = time.monotonic()
        with self._lock:
            bucket = self._buckets.get(session_id)
            if bucket is None:
                bucket = _Bucket(tokens=self.capacity, updated=now)
                self._buckets[session_id] = bucket
            elapsed = max(0.0, now - bucket.updated)
            bucket.tokens = min(self.capacity, bucket.tokens + elapsed * self.refill_per_s)
            bucket.updated = now
            if bucket.tokens >= 1.0:
                bucket.tokens -= 1.0
                return "allow", 0.0
            return "throttle", (1.0 - bucket.tokens) / self.refill_per_s


def rate_check(session_id: str, limiter: TokenBucketLimiter,
               now: float | None = None) -> tuple[str, float]:
    return limiter.check(session_id, now)


# ---------------------------------------------------------------------------
# audit log
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AuditRecord:
    timestamp: str
    session_id: str
    input_sha256: str
    score: float | None
    label: str | None
    matched_entry_id: str | None
    reply_source: str
    latency_s: float
    input_text: str | None = None  # populated only when plaintext logging is enabled

    def to_json(self) -> str:
        obj = {
            "timestamp": self.timestamp,
            "session_id": self.session_id,
            "input_sha256": self.input_sha256,
            "score": self.score,
            "label": self.label,
            "matched_entry_id": self.matched_entry_id,
            "reply_source": self.reply_source,
            "latency_s": self.latency_s,
        }
        if self.input_text is not None:
            obj["input_text"] = self.input_text
        return json.dumps(obj, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "AuditRecord":
        obj = json.loads(line)
        return cls(
            timestamp=obj["timestamp"],
            session_id=obj["session_id"],
            input_sha256=obj["input_sha256"],
            score=obj["score"],
            label=obj["label"],
            matched_entry_id=obj["matched_entry_id"],
            reply_source=obj["reply_source"],
            latency_s=obj["latency_s"],
            input_text=obj.get("input_text"),
        )


class AuditLog:
    """Append-only JSONL writer, one serialized writer per process.

    A write failure never fails the request; it is surfaced on the error
    counter for operators instead (availability over audit completeness).
    """

    def __init__(self, path: str, fsync: bool = False):
        self.path = path
        self.fsync = fsync
        self.write_errors = 0
        self._lock = threading.Lock()

    def append(self, record: AuditRecord) -> None:
        line = record.to_json()
        with self._lock:
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    if self.fsync:
                        fh.flush()
                        import os

                        os.fsync(fh.fileno())
            except OSError:
                self.write_errors += 1


def audit_record_for(decision: RouteDecision, session_id: str,
                     log_plaintext: bool = False) -> AuditRecord:
    return AuditRecord(
        timestamp=datetime.now(timezone.utc).isoformat(timespec="milliseconds"),
        session_id=session_id,
        input_sha256=hashlib.sha256(decision.input_text.encode("utf-8")).hexdigest(),
        score=decision.score,
        label=decision.label,
        matched_entry_id=decision.matched_entry_id,
        reply_source=decision.reply_source,
        latency_s=decision.latency_s,
        input_text=decision.input_text if log_plaintext else None,
    )


# ---------------------------------------------------------------------------
# full router
# ---------------------------------------------------------------------------

@dataclass
class Router:
    """Bundles the immutable index with the swappable config and safety taps."""

    index: FaqIndex
    answers: AnswerStore
    provider: EmbeddingProvider
    config: ThresholdConfig
    smalltalk_backend: object
    denylist: ContentFilter = field(default_factory=lambda: ContentFilter([]))
    limiter: TokenBucketLimiter | None = None
    audit: AuditLog | None = None
    log_plaintext: bool = False
    params: GenerationParams = field(default_factory=GenerationParams)
    policy: SmalltalkPolicy = field(default_factory=SmalltalkPolicy)
    _config_lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if not self.config.frozen:
            raise ConfigurationError("router refuses an unfrozen threshold config")
        if self.config.model_fingerprint != self.index.provider_fingerprint:
            raise ConfigurationError("config fingerprint does not match the index")

    def swap_config(self, new_config: ThresholdConfig) -> None:
        """Atomically replace the operating threshold with another frozen config."""
        if not new_config.frozen:
            raise ConfigurationError("cannot swap in an unfrozen config")
        if new_config.model_fingerprint != self.index.provider_fingerprint:
            raise ConfigurationError("new config fingerprint does not match the index")
        with self._config_lock:
            self.config = new_config

    def route(self, text: str, session_id: str = "local") -> RouteDecision:
        started = time.perf_counter()
        trimmed = text.strip()
        if not trimmed:
            raise DegenerateInputError("empty input")
        status, reason = content_filter(trimmed, self.denylist)
        if status == "blocked":
            decision = RouteDecision(
                input_text=trimmed,
                score=None,
                label=None,
                matched_entry_id=None,
                matched_question=None,
                answer_text=REFUSAL_REPLY,
                reply_source="blocked",
                latency_s=time.perf_counter() - started,
                blocked_reason=reason,
            )
        else:
            decision = decide(
                trimmed, self.index, self.answers, self.config, self.provider,
                self.smalltalk_backend, self.params, self.policy,
            )
        if self.audit is not None:
            self.audit.append(audit_record_for(decision, session_id, self.log_plaintext))
        return decision
