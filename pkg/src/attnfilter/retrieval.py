"""Recall@K evaluation over precomputed embeddings.

Similarity is cosine; ranking ties break toward the lower gallery index so
results are deterministic.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class RetrievalSet:
    gallery: np.ndarray  # [n, d]
    queries: np.ndarray  # [m, d]
    truth: np.ndarray    # [m] gallery indices

    def __post_init__(self):
        if self.gallery.ndim != 2 or self.queries.ndim != 2:
            raise ShapeError("gallery and queries must be 2-D embedding matrices")
        if self.gallery.shape[0] < 1 or self.queries.shape[0] < 1:
            raise ValueError("gallery and queries must be non-empty")
        if self.gallery.shape[1] != self.queries.shape[1]:
            raise ShapeError(
                f"embedding widths disagree: gallery {self.gallery.shape[1]}, "
                f"queries {self.queries.shape[1]}"
            )
        if self.truth.shape != (self.queries.shape[0],):
            raise ShapeError("truth must map each query to one gallery index")
        if self.truth.min() < 0 or self.truth.max() >= self.gallery.shape[0]:
            raise ValueError("truth indices out of gallery range")


def _unit_rows(x):
    x64 = x.astype(np.float64)
    norms = np.linalg.norm(x64, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return x64 / norms


def cosine_similarities(retrieval_set):
    """[m, n] cosine similarity matrix between queries and gallery."""
    g = _unit_rows(retrieval_set.gallery)
    q = _unit_rows(retrieval_set.queries)
    return q @ g.T


def recall_at_k(retrieval_set, k):
    """Fraction of queries whose true gallery item ranks in the top k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    sims = cosine_similarities(retrieval_set)
    # Stable sort on descending similarity keeps lower gallery indices first
    # among ties.
    order = np.argsort(-sims, axis=1, kind="stable")
    top = order[:, :k]
    hits = (top == retrieval_set.truth[:, None]).any(axis=1)
    return float(hits.mean())
