"""Tensor archive: a JSON manifest plus one raw float32 blob.

The manifest lists, in blob order, each tensor's name, dtype tag ("f32"),
shape, byte offset, and byte length, and names the blob file (resolved
relative to the manifest).  Blob values are little-endian float32,
row-major, concatenated without padding.  Serialization is byte-stable so
archives can be diffed against golden files.
"""

import json
from pathlib import Path

import numpy as np

from .errors import FormatError

MANIFEST_FORMAT = "tensor-archive-v1"


def blob_path_for(manifest_path):
    """Default blob path used by ``save_archive``: same stem, '.blob' suffix."""
    return Path(manifest_path).with_suffix(".blob")


def save_archive(tensors, path):
    """Write a name -> array mapping as manifest ``path`` plus a blob file.

    Arrays are stored as float32; iteration order of ``tensors`` fixes the
    blob layout.
    """
    path = Path(path)
    if not tensors:
        raise ValueError("archive needs at least one tensor")
    blob_file = blob_path_for(path)
    entries = []
    parts = []
    offset = 0
    for name, array in tensors.items():
        if not name:
            raise ValueError("tensor names must be non-empty")
        arr = np.ascontiguousarray(array, dtype="<f4")
        raw = arr.tobytes()
        entries.append(
            {
                "name": name,
                "dtype": "f32",
                "shape": [int(s) for s in arr.shape],
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        parts.append(raw)
        offset += len(raw)
    manifest = {
        "format": MANIFEST_FORMAT,
        "blob": blob_file.name,
        "tensors": entries,
    }
    path.write_bytes((json.dumps(manifest, indent=2) + "\n").encode("utf-8"))
    blob_file.write_bytes(b"".join(parts))


def load_archive(path):
    """Read an archive back into an ordered name -> float32 array dict."""
    path = Path(path)
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable manifest ({exc})") from exc
    if not isinstance(manifest, dict) or manifest.get("format") != MANIFEST_FORMAT:
        raise FormatError(f"{path}: not a {MANIFEST_FORMAT} manifest")
    blob_name = manifest.get("blob")
    entries = manifest.get("tensors")
    if not isinstance(blob_name, str) or not isinstance(entries, list):
        raise FormatError(f"{path}: manifest missing 'blob' or 'tensors'")
    try:
        blob = (path.parent / blob_name).read_bytes()
    except OSError as exc:
        raise FormatError(f"{path}: unreadable blob {blob_name!r} ({exc})") from exc
    tensors = {}
    expected_offset = 0
    for entry in entries:
        try:
            name = entry["name"]
            dtype = entry["dtype"]
            shape = tuple(int(s) for s in entry["shape"])
            offset = int(entry["offset"])
            nbytes = int(entry["nbytes"])
        except (TypeError, KeyError, ValueError) as exc:
            raise FormatError(f"{path}: malformed tensor entry {entry!r}") from exc
        if dtype != "f32":
            raise FormatError(f"{path}: unsupported dtype {dtype!r} for {name!r}")
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if nbytes != 4 * count:
            raise FormatError(f"{path}: {name!r} byte length does not match shape")
        if offset != expected_offset:
            raise FormatError(f"{path}: {name!r} offset breaks blob contiguity")
        if offset + nbytes > len(blob):
            raise FormatError(f"{path}: {name!r} extends past end of blob")
        if name in tensors:
            raise FormatError(f"{path}: duplicate tensor name {name!r}")
        flat = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        tensors[name] = flat.astype(np.float32).reshape(shape)
        expected_offset = offset + nbytes
    if expected_offset != len(blob):
        raise FormatError(f"{path}: blob has {len(blob) - expected_offset} trailing bytes")
    return tensors
