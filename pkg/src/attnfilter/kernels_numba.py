"""Numba @njit implementations of the hot kernels.

Same contracts as ``kernels_numpy``: float64 accumulation, single rounding
to float32.  Every prange axis is independent (rows, columns, or pixels),
so results never depend on the thread count.  ``cache=True`` persists the
compiled kernels so only the first process pays the JIT cost.
"""

import math

import numpy as np
from numba import njit, prange

_SQRT2 = math.sqrt(2.0)


@njit(cache=True, parallel=True)
def softmax_rows(x):
    r, c = x.shape
    out = np.empty((r, c), np.float32)
    for i in prange(r):
        m = np.float64(x[i, 0])
        for j in range(1, c):
            v = np.float64(x[i, j])
            if v > m:
                m = v
        e = np.empty(c, np.float64)
        s = 0.0
        for j in range(c):
            e[j] = math.exp(np.float64(x[i, j]) - m)
            s += e[j]
        for j in range(c):
            out[i, j] = np.float32(e[j] / s)
    return out


@njit(cache=True, parallel=True)
def softmax_colmean(x):
    r, c = x.shape
    # Phase 1: full softmax rows into a float64 scratch (rows independent).
    p = np.empty((r, c), np.float64)
    for i in prange(r):
        m = np.float64(x[i, 0])
        for j in range(1, c):
            v = np.float64(x[i, j])
            if v > m:
                m = v
        s = 0.0
        for j in range(c):
            p[i, j] = math.exp(np.float64(x[i, j]) - m)
            s += p[i, j]
        for j in range(c):
            p[i, j] /= s
    # Phase 2: column means, accumulated row-major (sequential: keeps the
    # summation order fixed regardless of thread count, and streams the
    # scratch instead of striding it column-wise).
    acc = np.zeros(c, np.float64)
    for i in range(r):
        for j in range(c):
            acc[j] += p[i, j]
    return acc / r


@njit(cache=True, parallel=True)
def layer_norm(x, gamma, beta, eps):
    r, d = x.shape
    out = np.empty((r, d), np.float32)
    for i in prange(r):
        s = 0.0
        for j in range(d):
            s += np.float64(x[i, j])
        mu = s / d
        v = 0.0
        for j in range(d):
            t = np.float64(x[i, j]) - mu
            v += t * t
        denom = math.sqrt(v / d + eps)
        for j in range(d):
            normed = (np.float64(x[i, j]) - mu) / denom
            out[i, j] = np.float32(normed * np.float64(gamma[j]) + np.float64(beta[j]))
    return out


@njit(cache=True, parallel=True)
def gelu(x):
    n = x.shape[0]
    out = np.empty(n, np.float32)
    for i in prange(n):
        v = np.float64(x[i])
        out[i] = np.float32(v * 0.5 * (1.0 + math.erf(v / _SQRT2)))
    return out


@njit(cache=True, parallel=True)
def dilate(mask, radius):
    h, w = mask.shape
    tmp = np.empty((h, w), np.bool_)
    for i in prange(h):
        for j in range(w):
            j0 = max(j - radius, 0)
            j1 = min(j + radius, w - 1)
            hit = False
            for q in range(j0, j1 + 1):
                if mask[i, q]:
                    hit = True
                    break
            tmp[i, j] = hit
    out = np.empty((h, w), np.bool_)
    for j in prange(w):
        for i in range(h):
            i0 = max(i - radius, 0)
            i1 = min(i + radius, h - 1)
            hit = False
            for p in range(i0, i1 + 1):
                if tmp[p, j]:
                    hit = True
                    break
            out[i, j] = hit
    return out
