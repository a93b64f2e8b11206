"""Shared dense kernels: matrix products, row softmax, layer norm, GELU.

Float32 numpy arrays are the universal numeric carrier.  Every reduction
(dot products, row sums, means, variances) accumulates in float64 and the
result rounds to float32 exactly once.  All functions are pure; none hold
state, so they are safe to call from any number of threads.
"""

import numpy as np

from . import backend
from .errors import ShapeError


def _f32(x):
    return np.ascontiguousarray(x, dtype=np.float32)


def matmul(a, b):
    """Matrix product with float64 accumulation, rounded to float32.

    Accepts stacked operands (numpy matmul broadcasting); the last two axes
    must be compatible.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.ndim}-D and {b.ndim}-D")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"inner dimensions disagree: {a.shape} x {b.shape}")
    out = np.matmul(a.astype(np.float64), b.astype(np.float64))
    return out.astype(np.float32)


def linear(x, weight, bias=None):
    """Affine map ``x @ weight.T + bias`` with a single float32 rounding.

    ``weight`` is stored [out_features, in_features].
    """
    x = np.asarray(x)
    weight = np.asarray(weight)
    if x.shape[-1] != weight.shape[-1]:
        raise ShapeError(f"linear: {x.shape} incompatible with weight {weight.shape}")
    out = np.matmul(x.astype(np.float64), weight.astype(np.float64).T)
    if bias is not None:
        out += np.asarray(bias, dtype=np.float64)
    return out.astype(np.float32)


def softmax_rows(m):
    """Row-stochastic softmax of a 2-D matrix, max-subtracted per row.

    Each output row sums to 1 within 1e-6 for finite input; row order is
    preserved (softmax is monotone within a row).
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise ShapeError(f"softmax_rows expects 2-D input, got shape {m.shape}")
    return backend.kernels().softmax_rows(_f32(m))


def softmax_colmean(m):
    """Column means of the row-softmax, returned in float64.

    Fused helper for attention profiling: avoids materializing the softmax
    when only the per-key average attention is needed.
    """
    m = np.asarray(m)
    if m.ndim != 2:
        raise ShapeError(f"softmax_colmean expects 2-D input, got shape {m.shape}")
    return backend.kernels().softmax_colmean(_f32(m))


def layer_norm(x, gamma, beta, eps):
    """Per-row mean/variance normalization followed by affine scale/shift."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x)
    gamma = np.asarray(gamma)
    beta = np.asarray(beta)
    if x.ndim != 2:
        raise ShapeError(f"layer_norm expects 2-D input, got shape {x.shape}")
    if gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
        raise ShapeError(
            f"layer_norm params {gamma.shape}/{beta.shape} do not match width {x.shape[1]}"
        )
    return backend.kernels().layer_norm(_f32(x), _f32(gamma), _f32(beta), float(eps))


def gelu(x):
    """Elementwise GELU in its exact error-function form, x * Phi(x)."""
    arr = _f32(x)
    flat = backend.kernels().gelu(arr.reshape(-1))
    return flat.reshape(arr.shape)
