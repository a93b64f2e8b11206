"""Pure-numpy implementations of the hot kernels.

Contract shared with ``kernels_numba``: inputs are contiguous float32 (or
bool for masks), every reduction accumulates in float64, and results round
to float32 exactly once on the way out.
"""

import numpy as np
from scipy.special import erf

_SQRT2 = np.sqrt(2.0)


def softmax_rows(x):
    """Row-wise softmax of a 2-D float32 matrix, max-subtracted for stability."""
    x64 = x.astype(np.float64)
    e = np.exp(x64 - x64.max(axis=1, keepdims=True))
    return (e / e.sum(axis=1, keepdims=True)).astype(np.float32)


def softmax_colmean(x):
    """Column means of the row-softmax of ``x``, kept in float64."""
    x64 = x.astype(np.float64)
    e = np.exp(x64 - x64.max(axis=1, keepdims=True))
    p = e / e.sum(axis=1, keepdims=True)
    return p.mean(axis=0)


def layer_norm(x, gamma, beta, eps):
    """Per-row mean/variance normalization of a 2-D float32 matrix, then affine."""
    x64 = x.astype(np.float64)
    centered = x64 - x64.mean(axis=1, keepdims=True)
    var = np.mean(centered * centered, axis=1, keepdims=True)
    normed = centered / np.sqrt(var + eps)
    out = normed * gamma.astype(np.float64) + beta.astype(np.float64)
    return out.astype(np.float32)


def gelu(x):
    """Exact-erf GELU of a 1-D float32 vector: x * Phi(x)."""
    x64 = x.astype(np.float64)
    return (x64 * 0.5 * (1.0 + erf(x64 / _SQRT2))).astype(np.float32)


def dilate(mask, radius):
    """Square dilation of a 2-D bool mask: output on iff any input pixel is
    on within Chebyshev distance <= radius.  Windowed counts via an integral
    image, O(h*w) for any radius."""
    if radius == 0:
        return mask.copy()
    h, w = mask.shape
    summed = np.zeros((h + 1, w + 1), dtype=np.int64)
    summed[1:, 1:] = mask.astype(np.int64).cumsum(axis=0).cumsum(axis=1)
    i = np.arange(h)
    j = np.arange(w)
    i0 = np.maximum(i - radius, 0)
    i1 = np.minimum(i + radius, h - 1) + 1
    j0 = np.maximum(j - radius, 0)
    j1 = np.minimum(j + radius, w - 1) + 1
    window = (
        summed[np.ix_(i1, j1)]
        - summed[np.ix_(i0, j1)]
        - summed[np.ix_(i1, j0)]
        + summed[np.ix_(i0, j0)]
    )
    return window > 0
