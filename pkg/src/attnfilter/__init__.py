"""Vision-transformer inference with attention-guided token filtering.

The pipeline tokenizes an image into patch vectors, drops tokens outside
the union of a calibrated static-region mask and per-image detected object
regions, and encodes only the survivors — trading a cheap pixel-space
detection stage for a quadratic reduction in encoder attention cost.
"""

from .archive import load_archive, save_archive
from .attention import (
    AttentionRateMap,
    AttentionSummary,
    attention_rate,
    attention_values,
    export_heatmap,
    high_attention_mask,
)
from .backend import available_backends, current_backend, use_backend
from .bench import BenchReport, BenchRow, bench_run, save_report
from .calibration import load_mask, mean_attention, save_mask, static_region_mask
from .config import VitConfig, load_config, save_config
from .errors import EmptyTokenSetError, FormatError, InputError, ShapeError
from .filtering import (
    DetectorSpec,
    atf_embed,
    detect,
    dilate,
    filter_tokens,
    rasterize_to_tokens,
    union_masks,
)
from .flops import flop_estimate
from .netpbm import read_image, read_pgm, write_pgm, write_ppm
from .numerics import gelu, layer_norm, linear, matmul, softmax_colmean, softmax_rows
from .retrieval import RetrievalSet, cosine_similarities, recall_at_k
from .vit import (
    ModelWeights,
    TokenSet,
    encode,
    encoder_layer,
    init_weights,
    load_weights,
    pool,
    save_weights,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "AttentionRateMap",
    "AttentionSummary",
    "BenchReport",
    "BenchRow",
    "DetectorSpec",
    "EmptyTokenSetError",
    "FormatError",
    "InputError",
    "ModelWeights",
    "RetrievalSet",
    "ShapeError",
    "TokenSet",
    "VitConfig",
    "atf_embed",
    "attention_rate",
    "attention_values",
    "available_backends",
    "bench_run",
    "cosine_similarities",
    "current_backend",
    "detect",
    "dilate",
    "encode",
    "encoder_layer",
    "export_heatmap",
    "filter_tokens",
    "flop_estimate",
    "gelu",
    "high_attention_mask",
    "init_weights",
    "layer_norm",
    "linear",
    "load_archive",
    "load_config",
    "load_mask",
    "load_weights",
    "matmul",
    "mean_attention",
    "pool",
    "rasterize_to_tokens",
    "read_image",
    "read_pgm",
    "recall_at_k",
    "save_archive",
    "save_config",
    "save_mask",
    "save_report",
    "save_weights",
    "softmax_colmean",
    "softmax_rows",
    "static_region_mask",
    "tokenize",
    "union_masks",
    "use_backend",
    "write_pgm",
    "write_ppm",
]
