"""Token filtering pipeline.

A pixel-level object detector (pluggable: ground-truth masks, luminance
thresholding, or precomputed score maps) produces a pixel mask, which is
dilated, rasterized onto the patch grid, and unioned with the calibrated
static-region mask.  The token filter then keeps exactly the marked tokens
before the encoder runs.  Tokens already carry their positional information,
so the surviving set is just a smaller bag of independent vectors.
"""

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import backend
from .archive import load_archive
from .errors import EmptyTokenSetError, FormatError, InputError, ShapeError
from .netpbm import read_pgm
from .vit import TokenSet, encode, tokenize

DETECTOR_KINDS = ("ground_truth", "luminance", "score_map")


@dataclass(frozen=True)
class DetectorSpec:
    """Detector choice plus post-processing parameters.

    ``threshold`` applies inclusively (score >= threshold keeps the pixel);
    ``dilation_radius`` expands detections by a square max-pool, both chosen
    to favor false positives over false negatives.
    """

    kind: str
    threshold: float = 0.4
    dilation_radius: int = 12

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise ValueError(f"detector kind must be one of {DETECTOR_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.dilation_radius < 0:
            raise ValueError(f"dilation_radius must be >= 0, got {self.dilation_radius}")


def dilate(mask, radius):
    """Square dilation: output pixel on iff any input pixel is on within
    Chebyshev distance <= radius.  Radius 0 copies the input."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ShapeError(f"dilate expects a 2-D mask, got shape {mask.shape}")
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    return backend.kernels().dilate(np.ascontiguousarray(mask, dtype=bool), int(radius))


def _intensity(image):
    """Normalized intensity in [0, 1]; RGB uses the channel mean."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.mean(axis=2)
    return arr / 255.0


def detect(image, spec, aux=None):
    """Produce the dilated object-region pixel mask for one image.

    ground_truth reads the aux PGM verbatim (nonzero = detected);
    luminance thresholds the image's own normalized intensity; score_map
    thresholds a precomputed real-valued map stored as a single 2-D tensor
    archive.  All kinds pass through ``dilate`` with the spec's radius.
    """
    image = np.asarray(image)
    height, width = image.shape[:2]
    if spec.kind == "ground_truth":
        if aux is None:
            raise InputError("ground_truth detector needs an aux mask file")
        raw = read_pgm(aux) != 0
        if raw.shape != (height, width):
            raise InputError(
                f"{aux}: mask shape {raw.shape} does not match image {(height, width)}"
            )
    elif spec.kind == "luminance":
        raw = _intensity(image) >= spec.threshold
    else:  # score_map
        if aux is None:
            raise InputError("score_map detector needs an aux score archive")
        tensors = load_archive(aux)
        if len(tensors) != 1:
            raise FormatError(f"{aux}: score archive must hold exactly one tensor")
        scores = next(iter(tensors.values()))
        if scores.ndim != 2:
            raise FormatError(f"{aux}: score map must be 2-D, got shape {scores.shape}")
        if scores.shape != (height, width):
            raise InputError(
                f"{aux}: score shape {scores.shape} does not match image {(height, width)}"
            )
        raw = scores.astype(np.float64) >= spec.threshold
    return dilate(raw, spec.dilation_radius)


def rasterize_to_tokens(mask, grid, patch_size):
    """Token-level mask: a token is on iff any pixel of its patch is on."""
    mask = np.asarray(mask, dtype=bool)
    h, w = grid
    p = patch_size
    if mask.shape != (h * p, w * p):
        raise ShapeError(
            f"pixel mask {mask.shape} does not match grid {grid} at patch size {p}"
        )
    return mask.reshape(h, p, w, p).any(axis=(1, 3)).reshape(-1)


def union_masks(a, b):
    """Elementwise OR of two token masks."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ShapeError(f"mask lengths disagree: {a.shape} vs {b.shape}")
    return a | b


def filter_tokens(token_set, mask):
    """Keep exactly the tokens whose original grid index is marked.

    The mask indexes the full grid, so it applies to already-filtered sets
    too.  Row order is preserved and token vectors are copied bit-exactly.
    """
    mask = np.asarray(mask, dtype=bool)
    total = token_set.grid[0] * token_set.grid[1]
    if mask.shape != (total,):
        raise ShapeError(f"mask length {mask.shape} != grid token count {total}")
    keep = mask[token_set.kept_indices]
    if not keep.any():
        raise EmptyTokenSetError("mask keeps no tokens")
    return TokenSet(
        tokens=token_set.tokens[keep],
        grid=token_set.grid,
        kept_indices=token_set.kept_indices[keep],
    )


@dataclass(frozen=True)
class FilterStats:
    tokens_before: int
    tokens_after: int
    detector_seconds: float
    encoder_seconds: float


def atf_embed(image, weights, config, static_mask, spec, aux=None):
    """Full filtered embedding path for one image.

    Composition: detect -> rasterize -> union with the static mask, then
    tokenize -> filter -> encode.  Returns the embedding and per-image
    stats (token counts, detector and encoder wall-clock seconds).
    """
    t0 = time.perf_counter()
    pixel_mask = detect(image, spec, aux)
    g = config.image_size // config.patch_size
    token_mask = union_masks(
        static_mask, rasterize_to_tokens(pixel_mask, (g, g), config.patch_size)
    )
    t1 = time.perf_counter()
    token_set = tokenize(image, weights, config)
    kept = filter_tokens(token_set, token_mask)
    embedding = encode(kept, weights, config)
    t2 = time.perf_counter()
    stats = FilterStats(
        tokens_before=token_set.count,
        tokens_after=kept.count,
        detector_seconds=t1 - t0,
        encoder_seconds=t2 - t1,
    )
    return embedding, stats


def resolve_aux(image_path, spec, dataset_dir):
    """Locate the aux file for one dataset image, by convention:
    masks/<name> for ground truth, scores/<stem>.json for score maps."""
    if spec.kind == "ground_truth":
        aux = Path(dataset_dir) / "masks" / (Path(image_path).stem + ".pgm")
    elif spec.kind == "score_map":
        aux = Path(dataset_dir) / "scores" / (Path(image_path).stem + ".json")
    else:
        return None
    if not aux.exists():
        raise InputError(f"missing aux file for {image_path}: {aux}")
    return aux
