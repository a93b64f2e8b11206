"""First-layer attention profiling.

For one image, the per-token attention value is the head-averaged column
mean of the first encoder layer's attention matrix: how much attention each
key token receives, averaged over all query rows and heads.  Because each
softmax row sums to one, the values sum to one and their mean is exactly
1/T.  The attention rate counts, over an image set, how often a token's
value exceeds that image's average.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .errors import ShapeError
from .netpbm import write_pgm
from .vit import tokenize


@dataclass(frozen=True)
class AttentionSummary:
    values: np.ndarray  # [T] float32, sums to 1 within 1e-5
    mean: float         # average of values, 1/T within 1e-7


@dataclass(frozen=True)
class AttentionRateMap:
    rates: np.ndarray   # [T] float64, integer multiples of 1/sample_count
    sample_count: int


def attention_values_raw(image, weights, config):
    """Per-token attention values of layer 1 in float64, on the full
    (unfiltered) token set."""
    if config.layers < 1:
        raise ValueError("attention profiling needs at least one encoder layer")
    token_set = tokenize(image, weights, config)
    layer = weights.layer_weights[0]
    h = numerics.layer_norm(token_set.tokens, layer.ln1_gamma, layer.ln1_beta, config.ln_eps)
    q = numerics.linear(h, layer.wq, layer.bq)
    k = numerics.linear(h, layer.wk, layer.bk)
    d_k = config.d_k
    scale = 1.0 / math.sqrt(d_k)
    acc = np.zeros(config.token_count, dtype=np.float64)
    for head in range(config.heads):
        cols = slice(head * d_k, (head + 1) * d_k)
        q64 = q[:, cols].astype(np.float64)
        k64 = k[:, cols].astype(np.float64)
        scores = (q64 @ k64.T * scale).astype(np.float32)
        acc += numerics.softmax_colmean(scores)
    return acc / config.heads


def attention_values(image, weights, config):
    """Attention summary for one image: the length-T value vector and its mean."""
    raw = attention_values_raw(image, weights, config)
    values = raw.astype(np.float32)
    mean = float(values.astype(np.float64).mean())
    return AttentionSummary(values=values, mean=mean)


def high_attention_mask(summary):
    """Tokens whose attention value strictly exceeds the image average."""
    return summary.values.astype(np.float64) > summary.mean


def attention_rate(images, weights, config):
    """Fraction of images in which each token receives high attention.

    Image order is irrelevant; rates are exact counts over the set.
    """
    if len(images) == 0:
        raise ValueError("attention_rate needs at least one image")
    counts = np.zeros(config.token_count, dtype=np.int64)
    for image in images:
        counts += high_attention_mask(attention_values(image, weights, config))
    rates = counts / float(len(images))
    return AttentionRateMap(rates=rates, sample_count=len(images))


def export_heatmap(rate_map, grid, path):
    """Render rates on the patch grid as a binary PGM, pixel = round(rate*255)."""
    h, w = grid
    rates = rate_map.rates
    if h * w != rates.shape[0]:
        raise ShapeError(f"grid {grid} does not cover {rates.shape[0]} tokens")
    pixels = np.floor(rates * 255.0 + 0.5).astype(np.uint8).reshape(h, w)
    write_pgm(pixels, path)
