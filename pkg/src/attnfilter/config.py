"""Model geometry configuration and its JSON file form."""

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import FormatError

POOLING_MODES = ("mean", "attention_pool")


@dataclass(frozen=True)
class VitConfig:
    """Geometry of the tokenizer/encoder stack.

    ``image_size`` is the square input edge in pixels and must be divisible
    by ``patch_size``; ``d_model`` must be divisible by ``heads``.
    """

    image_size: int
    patch_size: int
    channels: int = 1
    d_model: int = 64
    heads: int = 8
    layers: int = 4
    mlp_ratio: float = 4.0
    pooling: str = "mean"
    ln_eps: float = 1e-6

    def __post_init__(self):
        if self.image_size <= 0 or self.patch_size <= 0:
            raise ValueError("image_size and patch_size must be positive")
        if self.image_size % self.patch_size != 0:
            raise ValueError(
                f"image_size {self.image_size} not divisible by patch_size {self.patch_size}"
            )
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if self.d_model <= 0 or self.heads <= 0 or self.layers < 0:
            raise ValueError("d_model/heads must be positive, layers non-negative")
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model {self.d_model} not divisible by heads {self.heads}")
        if self.mlp_ratio <= 0:
            raise ValueError("mlp_ratio must be positive")
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}, got {self.pooling!r}")
        if self.ln_eps <= 0:
            raise ValueError("ln_eps must be positive")

    @property
    def grid(self):
        g = self.image_size // self.patch_size
        return (g, g)

    @property
    def token_count(self):
        g = self.image_size // self.patch_size
        return g * g

    @property
    def d_k(self):
        return self.d_model // self.heads

    @property
    def mlp_dim(self):
        return max(1, int(round(self.d_model * self.mlp_ratio)))

    @property
    def patch_dim(self):
        return self.patch_size * self.patch_size * self.channels


def load_config(path):
    """Read a VitConfig from a JSON file; unknown keys are rejected."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable config ({exc})") from exc
    if not isinstance(raw, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    known = {f.name for f in fields(VitConfig)}
    unknown = set(raw) - known
    if unknown:
        raise FormatError(f"{path}: unknown config keys {sorted(unknown)}")
    try:
        return VitConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: invalid config ({exc})") from exc


def save_config(config, path):
    Path(path).write_text(json.dumps(asdict(config), indent=2) + "\n", encoding="utf-8")
