"""Binary netpbm image IO: PGM (P5, single channel) and PPM (P6, RGB).

Only maxval 255 is supported.  Readers return uint8 arrays of shape (h, w)
or (h, w, 3); writers emit a fixed header layout so identical pixel data
always produces identical bytes.
"""

from pathlib import Path

import numpy as np

from .errors import FormatError

_WHITESPACE = b" \t\r\n"


def _header_tokens(data, count):
    """Read ``count`` whitespace-separated header tokens after the magic,
    honoring '#' comments, and return them with the raster start offset."""
    pos = 2  # past the 2-byte magic
    tokens = []
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1] in _WHITESPACE:
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos : pos + 1] not in _WHITESPACE:
            pos += 1
        if start == pos:
            raise FormatError("truncated netpbm header")
        tokens.append(data[start:pos])
    # Exactly one whitespace byte separates the header from the raster.
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise FormatError("missing separator before netpbm raster")
    return tokens, pos + 1


def read_image(path):
    """Read a binary PGM or PPM file into a uint8 array."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise FormatError(f"{path}: not a binary PGM/PPM file (magic {magic!r})")
    tokens, offset = _header_tokens(data, 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric netpbm header") from exc
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 supported, got {maxval}")
    expected = width * height * channels
    raster = data[offset:]
    if len(raster) != expected:
        raise FormatError(
            f"{path}: raster holds {len(raster)} bytes, expected {expected}"
        )
    pixels = np.frombuffer(raster, dtype=np.uint8)
    if channels == 1:
        return pixels.reshape(height, width).copy()
    return pixels.reshape(height, width, 3).copy()


def read_pgm(path):
    """Read a PGM file; rejects color images."""
    image = read_image(path)
    if image.ndim != 2:
        raise FormatError(f"{path}: expected single-channel PGM")
    return image


def write_pgm(image, path):
    """Write a 2-D uint8 array as binary PGM (P5, maxval 255)."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise FormatError(f"write_pgm expects a 2-D array, got shape {image.shape}")
    image = image.astype(np.uint8, copy=False)
    h, w = image.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.tobytes())


def write_ppm(image, path):
    """Write an (h, w, 3) uint8 array as binary PPM (P6, maxval 255)."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise FormatError(f"write_ppm expects (h, w, 3), got shape {image.shape}")
    image = image.astype(np.uint8, copy=False)
    h, w = image.shape[:2]
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.tobytes())
