"""Static-region token calibration.

Tokens whose mean attention over a sample image set strictly exceeds the
set-wide average (which is exactly 1/T, since each image's values sum to
one) are marked static and kept for every later image.  Calibration runs
once; the resulting mask is persisted as a one-line text file.
"""

import re
from pathlib import Path

import numpy as np

from .attention import attention_values_raw
from .errors import FormatError

_MASK_RE = re.compile(r"^T=(\d+);([01]*)$")


def mean_attention(samples, weights, config):
    """Per-token attention values averaged over the sample images.

    Accumulates per-image float64 vectors in list order, so recalibration
    on the same samples is bit-identical.
    """
    if len(samples) == 0:
        raise ValueError("calibration needs at least one sample image")
    acc = np.zeros(config.token_count, dtype=np.float64)
    for image in samples:
        acc += attention_values_raw(image, weights, config)
    return acc / len(samples)


def static_region_mask(samples, weights, config):
    """Boolean mask of tokens whose mean attention strictly exceeds the
    average over all tokens and samples."""
    means = mean_attention(samples, weights, config)
    return means > means.mean()


def save_mask(mask, path):
    """Write a mask as the one-line text form ``T=<n>;<bitstring>``."""
    mask = np.asarray(mask, dtype=bool)
    bits = "".join("1" if b else "0" for b in mask)
    Path(path).write_text(f"T={mask.shape[0]};{bits}\n", encoding="ascii")


def load_mask(path, expected_length=None):
    """Read a mask file back; optionally validate its length against the
    model's token count."""
    text = Path(path).read_text(encoding="ascii").rstrip("\n")
    match = _MASK_RE.match(text)
    if match is None:
        raise FormatError(f"{path}: not a mask file")
    length = int(match.group(1))
    bits = match.group(2)
    if len(bits) != length:
        raise FormatError(f"{path}: header says {length} bits, found {len(bits)}")
    if expected_length is not None and length != expected_length:
        raise FormatError(f"{path}: mask length {length} != expected {expected_length}")
    return np.frombuffer(bits.encode("ascii"), dtype=np.uint8) == ord("1")
