"""Hot numeric kernels: cosine scan over the FAQ matrix and trapezoidal integration.

Both kernels exist twice: a numba ``@njit`` build and a pure-numpy build.
The numpy path is selected by setting ``FAQGATE_NO_NUMBA=1`` in the
environment (or automatically when numba is unavailable).  The two paths
are interchangeable; ``benchmarks/bench_kernels.py`` compares them.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("FAQGATE_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLE:
        raise ImportError("numba disabled via FAQGATE_NO_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:
    njit = None
    NUMBA_ENABLED = False


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def top1_scan_np(matrix: np.ndarray, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Best row per query: (scores, row indices).

    matrix: (n_entries, dim) unit rows; queries: (n_queries, dim) unit rows.
    Ties resolve to the lowest row index (np.argmax picks the first maximum).
    """
    scores = queries @ matrix.T
    idx = np.argmax(scores, axis=1)
    best = scores[np.arange(scores.shape[0]), idx]
    return best, idx.astype(np.int64)


def topk_scan_np(matrix: np.ndarray, query: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k rows for one query, ordered by score descending then row index ascending."""
    scores = matrix @ query
    order = np.lexsort((np.arange(scores.shape[0]), -scores))[:k]
    return scores[order], order.astype(np.int64)


_np_trapezoid = np.trapezoid if hasattr(np, "trapezoid") else np.trapz


def trapezoid_np(x: np.ndarray, y: np.ndarray) -> float:
    """Trapezoidal integral of y over x."""
    return float(_np_trapezoid(y, x))


# ---------------------------------------------------------------------------
# numba implementations (compiled lazily, cached on disk)
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:

    @njit(cache=True)
    def _top1_scan_jit(matrix, queries):  # pragma: no cover - exercised via dispatch
        n_q = queries.shape[0]
        n_e = matrix.shape[0]
        scores = np.dot(queries, np.ascontiguousarray(matrix.T))
        best = np.empty(n_q, dtype=np.float64)
        idx = np.empty(n_q, dtype=np.int64)
        for q in range(n_q):
            hi = -2.0
            hi_i = 0
            for e in range(n_e):
                if scores[q, e] > hi:
                    hi = scores[q, e]
                    hi_i = e
            best[q] = hi
            idx[q] = hi_i
        return best, idx

    @njit(cache=True)
    def _topk_scan_jit(matrix, query, k):  # pragma: no cover - exercised via dispatch
        n_e = matrix.shape[0]
        scores = np.dot(matrix, query)
        taken = np.zeros(n_e, dtype=np.bool_)
        out_s = np.empty(k, dtype=np.float64)
        out_i = np.empty(k, dtype=np.int64)
        for j in range(k):
            hi = -2.0
            hi_i = -1
            for e in range(n_e):
                if not taken[e] and scores[e] > hi:
                    hi = scores[e]
                    hi_i = e
            taken[hi_i] = True
            out_s[j] = hi
            out_i[j] = hi_i
        return out_s, out_i

    @njit(cache=True)
    def _trapezoid_jit(x, y):  # pragma: no cover - exercised via dispatch
        acc = 0.0
        for i in range(x.shape[0] - 1):
            acc += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i])
        return acc

    def trapezoid_jit(x: np.ndarray, y: np.ndarray) -> float:
        return float(_trapezoid_jit(x, y))

    top1_scan_jit = _top1_scan_jit
    topk_scan_jit = _topk_scan_jit
else:
    top1_scan_jit = None
    topk_scan_jit = None
    trapezoid_jit = None


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    top1_scan = top1_scan_jit
    topk_scan = topk_scan_jit
    trapezoid = trapezoid_jit
else:
    top1_scan = top1_scan_np
    topk_scan = topk_scan_np
    trapezoid = trapezoid_np
