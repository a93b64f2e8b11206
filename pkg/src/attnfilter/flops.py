"""Closed-form matmul FLOP model for the encoder.

Per layer, with t tokens and width d (multiply-add counted as 2 flops):

    QKV/O projections   8 * t * d^2
    attention scores+values   4 * t^2 * d
    MLP                 4 * t * d^2 * mlp_ratio

summed over all layers.  Norms and activations are omitted: the model
exists to expose the quadratic-vs-linear token scaling, which matmuls
dominate.
"""


def flop_estimate(config, token_count):
    """Encoder matmul flops for a run over ``token_count`` tokens."""
    if token_count < 1:
        raise ValueError(f"token_count must be >= 1, got {token_count}")
    t = float(token_count)
    d = float(config.d_model)
    per_layer = 8.0 * t * d * d + 4.0 * t * t * d + 4.0 * t * d * d * config.mlp_ratio
    return config.layers * per_layer
