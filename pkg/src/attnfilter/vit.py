"""Patch tokenizer, transformer encoder, pooling head, weight persistence.

The encoder is pre-norm with no class token: x + MHA(LN(x)), then
x + MLP(LN(x)), full attention over whichever tokens are present.  Weight
tensors are immutable float32; see ``numerics`` for accumulation rules.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import numerics
from .archive import load_archive, save_archive
from .errors import FormatError, ShapeError

INIT_STD = 0.02


@dataclass(frozen=True)
class LayerWeights:
    ln1_gamma: np.ndarray
    ln1_beta: np.ndarray
    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray
    ln2_gamma: np.ndarray
    ln2_beta: np.ndarray
    w_up: np.ndarray
    b_up: np.ndarray
    w_down: np.ndarray
    b_down: np.ndarray


@dataclass(frozen=True)
class AttentionPoolWeights:
    query: np.ndarray    # [d]
    w_value: np.ndarray  # [d, d]
    b_value: np.ndarray  # [d]


@dataclass(frozen=True)
class ModelWeights:
    """All parameters of one model.  Projection matrices are stored
    [out_features, in_features]; arrays are read-only after construction."""

    patch_weight: np.ndarray  # [d, P*P*C]
    patch_bias: np.ndarray    # [d]
    pos_embed: np.ndarray     # [T, d]
    layer_weights: tuple
    final_gamma: np.ndarray
    final_beta: np.ndarray
    pool: AttentionPoolWeights


@dataclass(frozen=True)
class TokenSet:
    """Token matrix plus provenance: the patch grid it came from and the
    original (row-major) grid index of each surviving row."""

    tokens: np.ndarray        # [t, d] float32
    grid: tuple
    kept_indices: np.ndarray  # [t] int64, strictly increasing

    def __post_init__(self):
        if self.tokens.ndim != 2 or self.tokens.shape[0] < 1:
            raise ShapeError(f"tokens must be a non-empty 2-D matrix, got {self.tokens.shape}")
        if self.kept_indices.shape != (self.tokens.shape[0],):
            raise ShapeError("kept_indices length must match token count")
        if np.any(np.diff(self.kept_indices) <= 0):
            raise ShapeError("kept_indices must be strictly increasing")
        total = self.grid[0] * self.grid[1]
        if self.kept_indices[0] < 0 or self.kept_indices[-1] >= total:
            raise ShapeError("kept_indices out of range for grid")

    @property
    def count(self):
        return self.tokens.shape[0]


def _frozen(array, dtype=np.float32):
    out = np.ascontiguousarray(array, dtype=dtype)
    out.setflags(write=False)
    return out


def _flatten_patches(image, config):
    """Row-major patch extraction; pixels scaled to [0, 1] in float64."""
    image = np.asarray(image)
    size, channels = config.image_size, config.channels
    expected = (size, size) if channels == 1 else (size, size, channels)
    if image.shape != expected:
        raise ShapeError(f"image shape {image.shape} does not match config {expected}")
    g = size // config.patch_size
    p = config.patch_size
    scaled = image.astype(np.float64) / 255.0
    if channels == 1:
        patches = scaled.reshape(g, p, g, p).transpose(0, 2, 1, 3)
    else:
        patches = scaled.reshape(g, p, g, p, channels).transpose(0, 2, 1, 3, 4)
    return patches.reshape(g * g, config.patch_dim)


def tokenize(image, weights, config):
    """Project image patches into tokens and add positional embeddings.

    token_t = patch_weight @ flatten(patch_t) + patch_bias + pos_embed[t],
    evaluated in float64 and rounded once to float32.
    """
    patches = _flatten_patches(image, config)
    out = patches @ weights.patch_weight.astype(np.float64).T
    out += weights.patch_bias.astype(np.float64)
    out += weights.pos_embed.astype(np.float64)
    tokens = out.astype(np.float32)
    g = config.image_size // config.patch_size
    return TokenSet(
        tokens=tokens,
        grid=(g, g),
        kept_indices=np.arange(g * g, dtype=np.int64),
    )


def encoder_layer(token_set, layer, config):
    """One pre-norm transformer block over the tokens present.

    Attention is full (no mask); ``kept_indices`` pass through unchanged.
    """
    x = token_set.tokens
    if x.shape[1] != config.d_model:
        raise ShapeError(f"token width {x.shape[1]} != d_model {config.d_model}")
    eps = config.ln_eps
    h = numerics.layer_norm(x, layer.ln1_gamma, layer.ln1_beta, eps)
    q = numerics.linear(h, layer.wq, layer.bq)
    k = numerics.linear(h, layer.wk, layer.bk)
    v = numerics.linear(h, layer.wv, layer.bv)
    d_k = config.d_k
    scale = 1.0 / math.sqrt(d_k)
    ctx = np.empty_like(q)
    for head in range(config.heads):
        cols = slice(head * d_k, (head + 1) * d_k)
        q64 = q[:, cols].astype(np.float64)
        k64 = k[:, cols].astype(np.float64)
        scores = (q64 @ k64.T * scale).astype(np.float32)
        attn = numerics.softmax_rows(scores)
        ctx[:, cols] = (attn.astype(np.float64) @ v[:, cols].astype(np.float64)).astype(
            np.float32
        )
    x = x + numerics.linear(ctx, layer.wo, layer.bo)
    h2 = numerics.layer_norm(x, layer.ln2_gamma, layer.ln2_beta, eps)
    mlp = numerics.linear(
        numerics.gelu(numerics.linear(h2, layer.w_up, layer.b_up)),
        layer.w_down,
        layer.b_down,
    )
    return TokenSet(tokens=x + mlp, grid=token_set.grid, kept_indices=token_set.kept_indices)


def pool(token_set, mode, pool_weights=None):
    """Reduce a token set to one embedding vector.

    "mean" averages token rows; "attention_pool" lets a learned query attend
    over the tokens and returns the attended value projection.  Both are
    invariant to token row order.
    """
    tokens64 = token_set.tokens.astype(np.float64)
    if mode == "mean":
        return tokens64.mean(axis=0).astype(np.float32)
    if mode == "attention_pool":
        if pool_weights is None:
            raise ValueError("attention_pool mode needs pooling weights")
        d = tokens64.shape[1]
        scores = tokens64 @ pool_weights.query.astype(np.float64) / math.sqrt(d)
        scores -= scores.max()
        e = np.exp(scores)
        attn = e / e.sum()
        values = tokens64 @ pool_weights.w_value.astype(np.float64).T
        values += pool_weights.b_value.astype(np.float64)
        return (attn @ values).astype(np.float32)
    raise ValueError(f"unknown pooling mode {mode!r}")


def encode(token_set, weights, config):
    """Run all encoder layers, the final norm, and the pooling head."""
    ts = token_set
    for layer in weights.layer_weights:
        ts = encoder_layer(ts, layer, config)
    normed = numerics.layer_norm(ts.tokens, weights.final_gamma, weights.final_beta, config.ln_eps)
    pooled_set = TokenSet(tokens=normed, grid=ts.grid, kept_indices=ts.kept_indices)
    return pool(pooled_set, config.pooling, weights.pool)


def init_weights(config, seed=0):
    """Deterministic random initialization.

    Uses numpy's default_rng (PCG64) with the given seed.  Draw order is
    fixed: patch weight, positional embeddings, then per layer wq, wk, wv,
    wo, w_up, w_down, then the pooling query and value weights.  Matrices
    and embeddings are normal(0, 0.02); biases start at zero, norm scales
    at one.
    """
    rng = np.random.default_rng(seed)
    d = config.d_model

    def mat(shape):
        return _frozen(rng.normal(0.0, INIT_STD, size=shape))

    def zeros(shape):
        return _frozen(np.zeros(shape))

    def ones(shape):
        return _frozen(np.ones(shape))

    patch_weight = mat((d, config.patch_dim))
    pos_embed = mat((config.token_count, d))
    layers = []
    for _ in range(config.layers):
        layers.append(
            LayerWeights(
                ln1_gamma=ones(d),
                ln1_beta=zeros(d),
                wq=mat((d, d)),
                bq=zeros(d),
                wk=mat((d, d)),
                bk=zeros(d),
                wv=mat((d, d)),
                bv=zeros(d),
                wo=mat((d, d)),
                bo=zeros(d),
                ln2_gamma=ones(d),
                ln2_beta=zeros(d),
                w_up=mat((config.mlp_dim, d)),
                b_up=zeros(config.mlp_dim),
                w_down=mat((d, config.mlp_dim)),
                b_down=zeros(d),
            )
        )
    pool_weights = AttentionPoolWeights(
        query=mat((d,)),
        w_value=mat((d, d)),
        b_value=zeros(d),
    )
    return ModelWeights(
        patch_weight=patch_weight,
        patch_bias=zeros(d),
        pos_embed=pos_embed,
        layer_weights=tuple(layers),
        final_gamma=ones(d),
        final_beta=zeros(d),
        pool=pool_weights,
    )


_LAYER_FIELDS = (
    ("ln1.gamma", "ln1_gamma"),
    ("ln1.beta", "ln1_beta"),
    ("attn.wq", "wq"),
    ("attn.bq", "bq"),
    ("attn.wk", "wk"),
    ("attn.bk", "bk"),
    ("attn.wv", "wv"),
    ("attn.bv", "bv"),
    ("attn.wo", "wo"),
    ("attn.bo", "bo"),
    ("ln2.gamma", "ln2_gamma"),
    ("ln2.beta", "ln2_beta"),
    ("mlp.w_up", "w_up"),
    ("mlp.b_up", "b_up"),
    ("mlp.w_down", "w_down"),
    ("mlp.b_down", "b_down"),
)


def _weight_entries(weights):
    yield "patch.weight", weights.patch_weight
    yield "patch.bias", weights.patch_bias
    yield "pos_embed", weights.pos_embed
    for i, layer in enumerate(weights.layer_weights):
        for suffix, attr in _LAYER_FIELDS:
            yield f"layer{i:02d}.{suffix}", getattr(layer, attr)
    yield "final.gamma", weights.final_gamma
    yield "final.beta", weights.final_beta
    yield "pool.query", weights.pool.query
    yield "pool.value.weight", weights.pool.w_value
    yield "pool.value.bias", weights.pool.b_value


def save_weights(weights, path):
    """Persist model weights as a tensor archive."""
    save_archive(dict(_weight_entries(weights)), path)


def _expected_shapes(config):
    d = config.d_model
    shapes = {
        "patch.weight": (d, config.patch_dim),
        "patch.bias": (d,),
        "pos_embed": (config.token_count, d),
        "final.gamma": (d,),
        "final.beta": (d,),
        "pool.query": (d,),
        "pool.value.weight": (d, d),
        "pool.value.bias": (d,),
    }
    per_layer = {
        "ln1.gamma": (d,),
        "ln1.beta": (d,),
        "attn.wq": (d, d),
        "attn.bq": (d,),
        "attn.wk": (d, d),
        "attn.bk": (d,),
        "attn.wv": (d, d),
        "attn.bv": (d,),
        "attn.wo": (d, d),
        "attn.bo": (d,),
        "ln2.gamma": (d,),
        "ln2.beta": (d,),
        "mlp.w_up": (config.mlp_dim, d),
        "mlp.b_up": (config.mlp_dim,),
        "mlp.w_down": (d, config.mlp_dim),
        "mlp.b_down": (d,),
    }
    for i in range(config.layers):
        for suffix, shape in per_layer.items():
            shapes[f"layer{i:02d}.{suffix}"] = shape
    return shapes


def load_weights(path, config):
    """Load a weight archive, validating every name and shape against the
    configuration."""
    tensors = load_archive(path)
    expected = _expected_shapes(config)
    missing = sorted(set(expected) - set(tensors))
    extra = sorted(set(tensors) - set(expected))
    if missing or extra:
        raise FormatError(
            f"{path}: weight set mismatch (missing {missing[:4]}, unexpected {extra[:4]})"
        )
    for name, arr in tensors.items():
        if arr.shape != expected[name]:
            raise FormatError(
                f"{path}: {name} has shape {arr.shape}, config implies {expected[name]}"
            )
    get = lambda name: _frozen(tensors[name])
    layers = tuple(
        LayerWeights(
            **{attr: get(f"layer{i:02d}.{suffix}") for suffix, attr in _LAYER_FIELDS}
        )
        for i in range(config.layers)
    )
    return ModelWeights(
        patch_weight=get("patch.weight"),
        patch_bias=get("patch.bias"),
        pos_embed=get("pos_embed"),
        layer_weights=layers,
        final_gamma=get("final.gamma"),
        final_beta=get("final.beta"),
        pool=AttentionPoolWeights(
            query=get("pool.query"),
            w_value=get("pool.value.weight"),
            b_value=get("pool.value.bias"),
        ),
    )
