"""Curated FAQ: ingestion, answer store, and exact nearest-neighbor index.

The index is a brute-force cosine scan.  Corpora in this setting are a few
thousand entries, so an exact scan is fast, trivially correct, and has no
recall failure mode on the clinical path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .embedding import EmbeddingProvider
from .errors import ContractViolationError, DegenerateInputError, IngestError, ValidationError


@dataclass(frozen=True)
class FaqEntry:
    entry_id: str
    category: str
    question: str
    answer_id: str


@dataclass(frozen=True)
class AnswerText:
    answer_id: str
    text: str
    version: int = 1
    approved_by: str = ""


class AnswerStore:
    """answer_id -> canonical answer. Serving returns the stored bytes untouched."""

    def __init__(self, answers: list[AnswerText]):
        self._by_id = {a.answer_id: a for a in answers}

    def __contains__(self, answer_id: str) -> bool:
        return answer_id in self._by_id

    def __len__(self) -> int:
        return len(self._by_id)

    def get(self, answer_id: str) -> AnswerText:
        return self._by_id[answer_id]

    def text(self, answer_id: str) -> str:
        return self._by_id[answer_id].text


def _read_jsonl(path: str):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}:{lineno}: invalid JSON: {exc}")


def ingest_answers(path: str) -> AnswerStore:
    answers = []
    seen: dict[str, int] = {}
    for lineno, obj in _read_jsonl(path):
        answer_id = obj.get("answer_id")
        text = obj.get("text")
        if not answer_id or not isinstance(answer_id, str):
            raise IngestError(f"{path}:{lineno}: missing answer_id")
        if answer_id in seen:
            raise IngestError(
                f"{path}:{lineno}: duplicate answer_id {answer_id!r} (first seen line {seen[answer_id]})"
            )
        if not text or not isinstance(text, str):
            raise IngestError(f"{path}:{lineno}: empty answer text for {answer_id!r}")
        seen[answer_id] = lineno
        answers.append(
            AnswerText(
                answer_id=answer_id,
                text=text,
                version=int(obj.get("version", 1)),
                approved_by=str(obj.get("approved_by", "")),
            )
        )
    return AnswerStore(answers)


def ingest_faq(faq_path: str, answers_path: str) -> tuple[list[FaqEntry], AnswerStore]:
    """Parse faq.jsonl + answers.jsonl, enforcing uniqueness and referential integrity."""
    answers = ingest_answers(answers_path)
    entries = []
    seen: dict[str, int] = {}
    for lineno, obj in _read_jsonl(faq_path):
        entry_id = obj.get("entry_id")
        if not entry_id or not isinstance(entry_id, str):
            raise IngestError(f"{faq_path}:{lineno}: missing entry_id")
        if entry_id in seen:
            raise IngestError(
                f"{faq_path}:{lineno}: duplicate entry_id {entry_id!r} (first seen line {seen[entry_id]})"
            )
        seen[entry_id] = lineno
        question = obj.get("question")
        if not isinstance(question, str) or not question.strip():
            raise IngestError(f"{faq_path}:{lineno}: empty question for {entry_id!r}")
        answer_id = obj.get("answer_id")
        if not answer_id or answer_id not in answers:
            raise IngestError(
                f"{faq_path}:{lineno}: answer_id {answer_id!r} does not resolve in the answer store"
            )
        entries.append(
            FaqEntry(
                entry_id=entry_id,
                category=str(obj.get("category", "")),
                question=question,
                answer_id=answer_id,
            )
        )
    return entries, answers


@dataclass(frozen=True)
class ScoredMatch:
    entry_id: str
    score: float
    rank: int


class FaqIndex:
    """Immutable matrix of passage embeddings, rows ordered by entry_id.

    Row order is the tie-break: equal scores resolve to the lexicographically
    smaller entry_id, which is the lower row index after the sort.
    """

    def __init__(self, entries: list[FaqEntry], vectors: np.ndarray, provider_fingerprint: str):
        order = sorted(range(len(entries)), key=lambda i: entries[i].entry_id)
        self.entries: tuple[FaqEntry, ...] = tuple(entries[i] for i in order)
        matrix = np.ascontiguousarray(vectors[order], dtype=np.float64)
        matrix.setflags(write=False)
        self.vectors = matrix
        self.provider_fingerprint = provider_fingerprint
        self._by_id = {e.entry_id: e for e in self.entries}

    def entry(self, entry_id: str) -> FaqEntry:
        return self._by_id[entry_id]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.entries)

    def manifest(self) -> dict:
        return {
            "n_entries": len(self.entries),
            "dim": self.dim,
            "provider_fingerprint": self.provider_fingerprint,
            "categories": sorted({e.category for e in self.entries}),
        }


def build_index(entries: list[FaqEntry], provider: EmbeddingProvider) -> FaqIndex:
    """Embed every question in the passage role. Any provider failure aborts the build."""
    if not entries:
        raise DegenerateInputError("cannot build an index from zero entries")
    vectors = provider.embed([e.question for e in entries], role="passage")
    return FaqIndex(entries, np.stack(vectors), provider.fingerprint())


def top_match(query_vec: np.ndarray, index: FaqIndex, k: int = 1) -> list[ScoredMatch]:
    """The k entries with largest cosine, exact brute-force scan."""
    query_vec = np.ascontiguousarray(query_vec, dtype=np.float64)
    if query_vec.shape != (index.dim,):
        raise ContractViolationError(
            f"query dim {query_vec.shape} does not match index dim {index.dim}"
        )
    if not 1 <= k <= len(index):
        raise ValidationError(f"k must be in [1, {len(index)}], got {k}")
    scores, rows = kernels.topk_scan(index.vectors, query_vec, k)
    return [
        ScoredMatch(
            entry_id=index.entries[int(row)].entry_id,
            score=float(np.clip(score, -1.0, 1.0)),
            rank=rank,
        )
        for rank, (score, row) in enumerate(zip(scores, rows), start=1)
    ]


def batch_top1(queries: np.ndarray, index: FaqIndex) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized best-match scan for many queries: (scores, row indices)."""
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    if queries.shape[1] != index.dim:
        raise ContractViolationError(
            f"query dim {queries.shape[1]} does not match index dim {index.dim}"
        )
    scores, rows = kernels.top1_scan(index.vectors, queries)
    return np.clip(scores, -1.0, 1.0), rows
