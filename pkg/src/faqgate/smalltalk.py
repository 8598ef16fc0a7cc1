"""Casual-path reply generation behind a pluggable backend.

The real generator is an external HTTP endpoint with a constrained decoding
contract; a deterministic stub stands in for it everywhere tests run.  Reply
length is enforced here as a hard policy, not trusted to the model.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

from .errors import BackendUnavailableError, ValidationError


@dataclass(frozen=True)
class GenerationParams:
    max_new_tokens: int = 60
    temperature: float = 0.45
    top_p: float = 0.9
    repetition_penalty: float = 1.2

    def __post_init__(self):
        if self.max_new_tokens <= 0:
            raise ValidationError("max_new_tokens must be positive")
        if self.temperature < 0:
            raise ValidationError("temperature must be nonnegative")
        if not 0 < self.top_p <= 1:
            raise ValidationError("top_p must be in (0,1]")
        if self.repetition_penalty < 1:
            raise ValidationError("repetition_penalty must be >= 1")


@dataclass(frozen=True)
class SmalltalkPolicy:
    system_instruction: str = (
        "You are a friendly receptionist. Reply with one short, supportive, "
        "non-clinical sentence. Never give medical information or advice."
    )
    max_reply_sentences: int = 1
    refuse_clinical_content: bool = True


# Runs of terminal punctuation (incl. ellipsis and CJK forms) end a sentence;
# over-splitting is the safe direction when the cap truncates replies.
_SENTENCE_END = re.compile(r"[.!?…。！？]+[\"')」】]*\s*")


def split_sentences(text: str) -> list[str]:
    """Split on runs of terminal punctuation, keeping the punctuation attached."""
    parts = []
    pos = 0
    for m in _SENTENCE_END.finditer(text):
        parts.append(text[pos : m.end()].strip())
        pos = m.end()
    tail = text[pos:].strip()
    if tail:
        parts.append(tail)
    return [p for p in parts if p]


def truncate_sentences(text: str, max_sentences: int) -> str:
    sentences = split_sentences(text)
    return " ".join(sentences[:max_sentences])


_STUB_TEMPLATES = (
    "That sounds interesting, tell me more!",
    "Oh, that sounds lovely.",
    "Thanks for sharing that, it brightens the day.",
    "That's nice to hear!",
    "I'm glad you mentioned that.",
    "What a pleasant thought.",
)


def stub_generate(text: str) -> str:
    """Deterministic test double: template chosen by a stable hash of the text."""
    digest = hashlib.sha256(text.strip().encode("utf-8")).digest()
    return _STUB_TEMPLATES[int.from_bytes(digest[:4], "little") % len(_STUB_TEMPLATES)]


class StubBackend:
    """In-process backend; counts invocations so tests can assert the casual path."""

    def __init__(self):
        self.call_count = 0

    def generate(self, text: str, params: GenerationParams, policy: SmalltalkPolicy) -> str:
        self.call_count += 1
        return stub_generate(text)


class FailingBackend:
    """Backend that is always down; exercises the degraded-mode fallback."""

    def generate(self, text, params, policy):
        raise BackendUnavailableError("small-talk backend configured to fail")


class HttpBackend:
    """POST /generate with the four decoding fields forwarded verbatim."""

    def __init__(self, base_url: str, timeout_s: float = 10.0, transport=None):
        import httpx

        self._client = httpx.Client(base_url=base_url, timeout=timeout_s, transport=transport)

    def generate(self, text: str, params: GenerationParams, policy: SmalltalkPolicy) -> str:
        import httpx

        payload = {
            "prompt": text,
            "max_new_tokens": params.max_new_tokens,
            "temperature": params.temperature,
            "top_p": params.top_p,
            "repetition_penalty": params.repetition_penalty,
            "system_instruction": policy.system_instruction,
        }
        try:
            resp = self._client.post("/generate", json=payload)
            resp.raise_for_status()
            reply = resp.json().get("reply", "")
        except (httpx.TransportError, httpx.HTTPStatusError, ValueError) as exc:
            raise BackendUnavailableError(f"small-talk backend failed: {exc}")
        if not isinstance(reply, str) or not reply.strip():
            raise BackendUnavailableError("small-talk backend returned an empty reply")
        return reply


def generate(text: str, params: GenerationParams, policy: SmalltalkPolicy, backend) -> str:
    """Call the backend and enforce the sentence cap on whatever comes back."""
    reply = backend.generate(text, params, policy)
    reply = truncate_sentences(reply, policy.max_reply_sentences)
    if not reply:
        raise BackendUnavailableError("small-talk backend produced no usable sentence")
    return reply
