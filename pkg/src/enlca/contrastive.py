"""Contrastive separation of relevant from irrelevant features.

Relevance between positions is the amplified cosine of their query/key
features. Per query, the scores are sorted descending; the loss compares
the average exponentiated score of the top group (size floor(n1*N))
against an equally sized group starting at rank floor(n2*N), plus a
margin. Driving the loss down pushes the two groups apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrices import ShapeError, as_matrix, normalize_columns

__all__ = [
    "ContrastiveConfig",
    "contrastive_loss",
    "reconstruction_loss",
    "relevance_scores",
    "total_loss",
]


@dataclass(frozen=True)
class ContrastiveConfig:
    """Loss hyperparameters: group fraction n1, irrelevant-window start
    fraction n2, margin b and the composition weight lambda_cl."""

    k_amp: float = 6.0
    n1: float = 0.02
    n2: float = 0.08
    b: float = 1.0
    lambda_cl: float = 1e-3

    def __post_init__(self):
        if not self.k_amp >= 1.0:
            raise ValueError(f"k_amp must be >= 1, got {self.k_amp}")
        for name in ("n1", "n2"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if self.n1 + self.n2 > 1.0:
            raise ValueError(
                f"the irrelevant window must fit: n1 + n2 <= 1, got {self.n1} + {self.n2}"
            )
        if not np.isfinite(self.b) or not np.isfinite(self.lambda_cl):
            raise ValueError("b and lambda_cl must be finite")


def relevance_scores(q, k, k_amp: float, epsilon: float = 1e-12) -> np.ndarray:
    """N x N matrix of amplified cosines: entry (i, j) is k_amp times the
    cosine between query column i and key column j. Invariant to positive
    rescaling of any input column."""
    q = as_matrix(q, "q")
    k = as_matrix(k, "k")
    if q.shape != k.shape:
        raise ShapeError(f"q and k need equal shapes, got {q.shape} vs {k.shape}")
    if not k_amp >= 1.0:
        raise ValueError(f"k_amp must be >= 1, got {k_amp}")
    return k_amp * (normalize_columns(q, epsilon).T @ normalize_columns(k, epsilon))


def contrastive_loss(t, cfg: ContrastiveConfig) -> float:
    """Mean over rows of -log(top-group mean exp / window mean exp) + b.

    Both groups hold exactly P = floor(n1 * N) entries; the window starts
    at 0-based rank floor(n2 * N) of the descending sort. The loss is not
    clamped, so values below b (or below zero) are legal and indicate the
    top group already dominates.
    """
    t = as_matrix(t, "relevance matrix")
    n = t.shape[1]
    p = int(np.floor(cfg.n1 * n))
    start = int(np.floor(cfg.n2 * n))
    if p < 1:
        raise ShapeError(f"top group is empty: floor(n1*N) = 0 for N={n}, n1={cfg.n1}")
    if start + p > n:
        raise ShapeError(
            f"irrelevant window overruns: N={n}, n1={cfg.n1}, n2={cfg.n2} "
            f"needs ranks up to {start + p}"
        )
    ordered = np.sort(t, axis=1)[:, ::-1]
    exp_ordered = np.exp(ordered)
    numerator = exp_ordered[:, :p].mean(axis=1)
    denominator = exp_ordered[:, start:start + p].mean(axis=1)
    per_row = -np.log(numerator / denominator) + cfg.b
    return float(per_row.mean())


def reconstruction_loss(sr, hr) -> float:
    """Mean absolute elementwise difference between two images/feature maps."""
    sr = as_matrix(sr, "sr")
    hr = as_matrix(hr, "hr")
    if sr.shape != hr.shape:
        raise ShapeError(f"sr and hr need equal shapes, got {sr.shape} vs {hr.shape}")
    return float(np.abs(hr - sr).mean())


def total_loss(rec: float, cl: float, lambda_cl: float) -> float:
    """Composite training objective: rec + lambda_cl * cl."""
    values = (rec, cl, lambda_cl)
    if not all(np.isfinite(v) for v in values):
        raise ValueError(f"loss terms must be finite, got {values}")
    return rec + lambda_cl * cl
