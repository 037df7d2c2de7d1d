"""Exact quadratic-cost non-local attention.

Every output position is the softmax-weighted sum of all value columns,
with weights exp(q_i . k_j) normalized per query. This is the slow,
trustworthy baseline that the linear-complexity path is checked against.

Evaluation is chunked over query positions so the N x N weight matrix is
never materialized unless explicitly requested.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .matrices import ShapeError, as_matrix

__all__ = [
    "AttentionOutput",
    "attention_row_entropies",
    "correlation_map",
    "exact_attention",
    "shannon_entropy",
]


@dataclass(frozen=True)
class AttentionOutput:
    """Result of exact attention: y is c_out x N; weights (N x N, row i =
    weights of query i) is populated only when keep_weights was set."""

    y: np.ndarray
    weights: Optional[np.ndarray] = None


def _validated_qkv(q, k, v):
    q = as_matrix(q, "q")
    k = as_matrix(k, "k")
    v = as_matrix(v, "v")
    if q.shape[0] != k.shape[0]:
        raise ShapeError(f"q and k need equal channel counts, got {q.shape} vs {k.shape}")
    if q.shape[1] != k.shape[1] or q.shape[1] != v.shape[1]:
        raise ShapeError(
            f"q, k, v need equal position counts, got {q.shape}, {k.shape}, {v.shape}"
        )
    return q, k, v


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def exact_attention(q, k, v, keep_weights: bool = False, chunk_size: int = 256) -> AttentionOutput:
    """Full-precision attention output for q, k (c x N) and v (c_out x N).

    Work and transient memory are O(chunk_size * N); weights are stored
    only when keep_weights is True, which costs O(N^2) memory.
    """
    q, k, v = _validated_qkv(q, k, v)
    n = q.shape[1]
    y = np.empty((v.shape[0], n), dtype=np.float64)
    weights = np.empty((n, n), dtype=np.float64) if keep_weights else None
    for start in range(0, n, chunk_size):
        stop = min(start + chunk_size, n)
        w = _softmax_rows(q[:, start:stop].T @ k)
        y[:, start:stop] = v @ w.T
        if keep_weights:
            weights[start:stop] = w
    return AttentionOutput(y=y, weights=weights)


def correlation_map(q, k, query_index: int) -> np.ndarray:
    """Softmax-normalized relevance of one query position against all
    positions: length-N vector. Reshaping to an h x w image is the
    caller's concern."""
    q = as_matrix(q, "q")
    k = as_matrix(k, "k")
    if q.shape[0] != k.shape[0]:
        raise ShapeError(f"q and k need equal channel counts, got {q.shape} vs {k.shape}")
    if not 0 <= query_index < q.shape[1]:
        raise IndexError(f"query_index {query_index} out of range for {q.shape[1]} positions")
    logits = k.T @ q[:, query_index]
    e = np.exp(logits - logits.max())
    return e / e.sum()


def shannon_entropy(p) -> float:
    """Entropy in nats of a probability vector; zero entries contribute 0."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise ShapeError("entropy expects a non-empty 1-D vector")
    if (p < 0).any() or not np.isfinite(p).all():
        raise ValueError("entropy expects non-negative finite probabilities")
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def attention_row_entropies(q, k, chunk_size: int = 256) -> np.ndarray:
    """Per-query Shannon entropy of the exact attention weight rows,
    computed without holding the full weight matrix."""
    q = as_matrix(q, "q")
    k = as_matrix(k, "k")
    if q.shape[0] != k.shape[0]:
        raise ShapeError(f"q and k need equal channel counts, got {q.shape} vs {k.shape}")
    n = q.shape[1]
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, chunk_size):
        stop = min(start + chunk_size, n)
        w = _softmax_rows(q[:, start:stop].T @ k)
        logw = np.where(w > 0, np.log(np.where(w > 0, w, 1.0)), 0.0)
        out[start:stop] = -(w * logw).sum(axis=1)
    return out
