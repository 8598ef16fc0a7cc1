"""Embedding providers and vector math.

Vectors are plain 1-D float64 numpy arrays, always L2-normalized before they
leave this module.  Three provider kinds exist:

* ``toy_hash``        - deterministic character n-gram hashing; no ML runtime.
* ``file_cache``      - vectors precomputed offline, keyed by sha256 of the
                        prefixed text.
* ``external_endpoint`` - HTTP POST /embed to a local encoder service.
"""

from __future__ import annotations

import base64
import hashlib
import threading
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import (
    CacheMissError,
    ConfigurationError,
    ContractViolationError,
    DegenerateInputError,
    TransportError,
)

PROVIDER_KINDS = ("file_cache", "external_endpoint", "toy_hash")
ROLES = ("query", "passage")


def normalize(v: np.ndarray) -> np.ndarray:
    """Return v / ||v||. Rejects the zero vector."""
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise DegenerateInputError("cannot normalize the zero vector")
    return v / n


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Dot product of two unit vectors, clamped to [-1, 1] against rounding."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ContractViolationError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.clip(np.dot(u, v), -1.0, 1.0))


def text_key(text: str, prefix: str) -> str:
    """Cache key for a text under a role prefix: sha256 hex of the prefixed text."""
    return hashlib.sha256((prefix + text).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class EmbeddingProviderSpec:
    provider_kind: str
    model_id: str
    dim: int
    query_prefix: str = ""
    passage_prefix: str = ""
    cache_path: str | None = None
    endpoint_url: str | None = None

    def __post_init__(self):
        if self.provider_kind not in PROVIDER_KINDS:
            raise ConfigurationError(f"unknown provider_kind {self.provider_kind!r}")
        if self.dim <= 0:
            raise ConfigurationError("dim must be positive")
        if self.provider_kind == "file_cache" and not self.cache_path:
            raise ConfigurationError("file_cache provider requires cache_path")
        if self.provider_kind == "external_endpoint" and not self.endpoint_url:
            raise ConfigurationError("external_endpoint provider requires endpoint_url")

    def prefix_for(self, role: str) -> str:
        if role not in ROLES:
            raise ConfigurationError(f"unknown role {role!r}")
        return self.query_prefix if role == "query" else self.passage_prefix

    def fingerprint(self) -> str:
        """Identity of the passage-embedding space; indexes and threshold configs must agree on it."""
        raw = f"{self.model_id}|{self.dim}|{self.passage_prefix}"
        return hashlib.sha256(raw.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# toy hashing embedder
# ---------------------------------------------------------------------------

def _ngrams(text: str) -> list[str]:
    padded = f"\x02{text}\x03"
    grams = []
    for n in (2, 3):
        grams.extend(padded[i : i + n] for i in range(len(padded) - n + 1))
    return grams


def toy_embed(text: str, dim: int) -> np.ndarray:
    """Deterministic model-free embedder: signed character n-gram hashing.

    Pure function of (text, dim); small edits to the text move the vector a
    little, unrelated texts land far apart.  Quality is irrelevant, it exists
    so the whole pipeline runs without an ML runtime.
    """
    if dim < 8:
        raise ConfigurationError("toy_embed requires dim >= 8")
    text = text.strip()
    if not text:
        raise DegenerateInputError("cannot embed empty text")
    v = np.zeros(dim, dtype=np.float64)
    for gram in _ngrams(text):
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        h = int.from_bytes(digest, "little")
        sign = 1.0 if h & 1 else -1.0
        v[(h >> 1) % dim] += sign
    return normalize(v)


# ---------------------------------------------------------------------------
# providers
# ---------------------------------------------------------------------------

class _MemoCache:
    """Bounded memoization cache, safe for concurrent readers/writers."""

    def __init__(self, max_items: int):
        self._data: OrderedDict[tuple[str, str], np.ndarray] = OrderedDict()
        self._max = max_items
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            if key in self._data:
                return
            self._data[key] = value
            while len(self._data) > self._max:
                self._data.popitem(last=False)


class EmbeddingProvider:
    """Base provider: trims inputs, applies role prefixes, memoizes, normalizes."""

    def __init__(self, spec: EmbeddingProviderSpec, memo_size: int = 4096):
        self.spec = spec
        self._memo = _MemoCache(memo_size) if memo_size else None

    @property
    def dim(self) -> int:
        return self.spec.dim

    def fingerprint(self) -> str:
        return self.spec.fingerprint()

    def embed(self, texts: list[str], role: str) -> list[np.ndarray]:
        if not texts:
            raise DegenerateInputError("embed requires at least one text")
        prefix = self.spec.prefix_for(role)
        trimmed = []
        for t in texts:
            t = t.strip()
            if not t:
                raise DegenerateInputError("cannot embed empty text")
            trimmed.append(t)
        out: list[np.ndarray | None] = [None] * len(trimmed)
        missing: list[str] = []
        missing_at: list[int] = []
        for i, t in enumerate(trimmed):
            cached = self._memo.get((role, t)) if self._memo else None
            if cached is not None:
                out[i] = cached
            else:
                missing.append(prefix + t)
                missing_at.append(i)
        if missing:
            vectors = self._embed_prefixed(missing, role)
            for i, vec in zip(missing_at, vectors):
                if vec.shape != (self.spec.dim,):
                    raise ContractViolationError(
                        f"provider returned dim {vec.shape[0]}, spec says {self.spec.dim}"
                    )
                vec = normalize(vec)
                vec.setflags(write=False)
                out[i] = vec
                if self._memo:
                    self._memo.put((role, trimmed[i]), vec)
        return out  # type: ignore[return-value]

    def embed_one(self, text: str, role: str) -> np.ndarray:
        return self.embed([text], role)[0]

    def _embed_prefixed(self, prefixed_texts: list[str], role: str) -> list[np.ndarray]:
        raise NotImplementedError


class ToyHashProvider(EmbeddingProvider):
    def _embed_prefixed(self, prefixed_texts, role):
        return [toy_embed(t, self.spec.dim) for t in prefixed_texts]


class FileCacheProvider(EmbeddingProvider):
    """Vectors precomputed offline.

    Cache file format: header line ``dim=<N> model=<id>``, then one record per
    line: ``<sha256-of-prefixed-text> <base64 of little-endian float32 array>``.
    """

    def __init__(self, spec: EmbeddingProviderSpec, memo_size: int = 4096):
        super().__init__(spec, memo_size)
        self._table = load_cache_file(spec.cache_path, expect_dim=spec.dim, expect_model=spec.model_id)

    def _embed_prefixed(self, prefixed_texts, role):
        vectors = []
        for t in prefixed_texts:
            key = hashlib.sha256(t.encode("utf-8")).hexdigest()
            vec = self._table.get(key)
            if vec is None:
                raise CacheMissError(key)
            vectors.append(vec)
        return vectors


class EndpointProvider(EmbeddingProvider):
    """HTTP POST /embed with JSON {texts, role} -> {vectors, dim}.

    One retry then fail; the clinical path must not degrade silently.
    """

    def __init__(self, spec: EmbeddingProviderSpec, memo_size: int = 4096,
                 timeout_s: float = 10.0, transport=None):
        super().__init__(spec, memo_size)
        import httpx

        self._client = httpx.Client(
            base_url=spec.endpoint_url, timeout=timeout_s, transport=transport
        )

    def _embed_prefixed(self, prefixed_texts, role):
        import httpx

        payload = {"texts": prefixed_texts, "role": role}
        last_exc = None
        for _ in range(2):
            try:
                resp = self._client.post("/embed", json=payload)
                resp.raise_for_status()
                body = resp.json()
                break
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last_exc = exc
        else:
            raise TransportError(f"embedding endpoint unreachable: {last_exc}")
        if body.get("dim") != self.spec.dim:
            raise ContractViolationError(
                f"endpoint returned dim {body.get('dim')}, spec says {self.spec.dim}"
            )
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(prefixed_texts):
            raise ContractViolationError("endpoint returned wrong number of vectors")
        return [np.asarray(v, dtype=np.float64) for v in vectors]


def make_provider(spec: EmbeddingProviderSpec, **kwargs) -> EmbeddingProvider:
    if spec.provider_kind == "toy_hash":
        return ToyHashProvider(spec, **kwargs)
    if spec.provider_kind == "file_cache":
        return FileCacheProvider(spec, **kwargs)
    return EndpointProvider(spec, **kwargs)


def embed(texts: list[str], role: str, spec: EmbeddingProviderSpec) -> list[np.ndarray]:
    """One-shot convenience wrapper; builds a provider and embeds."""
    return make_provider(spec, memo_size=0).embed(texts, role)


# ---------------------------------------------------------------------------
# cache file i/o
# ---------------------------------------------------------------------------

def save_cache_file(path: str, model_id: str, dim: int, records: dict[str, np.ndarray]) -> None:
    """Write a cache file mapping sha256-of-prefixed-text -> vector."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={dim} model={model_id}\n")
        for key, vec in records.items():
            raw = np.asarray(vec, dtype="<f4").tobytes()
            fh.write(f"{key} {base64.b64encode(raw).decode('ascii')}\n")


def load_cache_file(path: str, expect_dim: int | None = None,
                    expect_model: str | None = None) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        fields = dict(part.split("=", 1) for part in header.split() if "=" in part)
        if "dim" not in fields or "model" not in fields:
            raise ConfigurationError(f"malformed cache header: {header!r}")
        dim = int(fields["dim"])
        if expect_dim is not None and dim != expect_dim:
            raise ContractViolationError(f"cache dim {dim} != spec dim {expect_dim}")
        if expect_model is not None and fields["model"] != expect_model:
            raise ConfigurationError(
                f"cache model {fields['model']!r} != spec model {expect_model!r}"
            )
        table: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                key, blob = line.split(" ", 1)
                vec = np.frombuffer(base64.b64decode(blob), dtype="<f4").astype(np.float64)
            except Exception as exc:
                raise ConfigurationError(f"malformed cache record at line {lineno}: {exc}")
            if vec.shape[0] != dim:
                raise ContractViolationError(
                    f"cache record at line {lineno} has dim {vec.shape[0]}, header says {dim}"
                )
            table[key] = vec
        return table
