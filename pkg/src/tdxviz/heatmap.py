"""Heatmap stacks and their binary on-disk format.

A stack holds one attribution map per frame, normalized to [0, 1]. The file
format is the magic bytes ``TDXH``, three little-endian uint32 values
(T, H, W), then T*H*W little-endian float32 values, row-major within each
frame, frames in order. A ``meta.json`` sidecar records provenance.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"TDXH"
METHODS = ("saliency", "gradcam")
NORMALIZATIONS = ("per-frame", "per-sequence")


@dataclass(eq=False)
class HeatmapStack:
    """Per-frame attribution maps plus method metadata."""

    maps: np.ndarray  # (T, H', W') float32 in [0, 1]
    method: str
    class_index: int
    model_id: str
    normalization: str = "per-frame"

    def __post_init__(self):
        self.maps = np.asarray(self.maps, dtype=np.float32)
        if self.maps.ndim != 3:
            raise ValueError(f"maps must be (T, H, W), got shape {self.maps.shape}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
        if not np.isfinite(self.maps).all():
            raise ValueError("maps contain NaN or Inf")
        if self.maps.min() < 0.0 or self.maps.max() > 1.0:
            raise ValueError("maps must lie in [0, 1]")


def normalize_maps(raw: np.ndarray, normalization: str = "per-frame") -> np.ndarray:
    """Scale nonnegative raw maps so the maximum of each scope is exactly 1.

    All-zero scopes are left untouched rather than divided.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    out = np.array(raw, dtype=np.float32, copy=True)
    if normalization == "per-sequence":
        peak = out.max()
        if peak > 0:
            out /= peak
        return out
    for t in range(out.shape[0]):
        peak = out[t].max()
        if peak > 0:
            out[t] /= peak
    return out


def write_stack(stack: HeatmapStack, path: str | Path) -> Path:
    """Write the binary stack and its meta.json sidecar."""
    path = Path(path)
    t, h, w = stack.maps.shape
    payload = stack.maps.astype("<f4").tobytes(order="C")
    path.write_bytes(MAGIC + struct.pack("<III", t, h, w) + payload)
    meta = {
        "method": stack.method,
        "class_index": stack.class_index,
        "normalization": stack.normalization,
        "model_id": stack.model_id,
    }
    meta_path = path.parent / "meta.json"
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    return path


def read_stack(path: str | Path) -> HeatmapStack:
    """Read a stack written by :func:`write_stack`."""
    path = Path(path)
    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise FormatError(f"{path} does not start with the {MAGIC!r} magic bytes")
    if len(blob) < 16:
        raise FormatError(f"{path} is truncated")
    t, h, w = struct.unpack("<III", blob[4:16])
    expected = 16 + 4 * t * h * w
    if len(blob) != expected:
        raise FormatError(f"{path} has {len(blob)} bytes, expected {expected}")
    maps = np.frombuffer(blob[16:], dtype="<f4").reshape(t, h, w).copy()
    meta_path = path.parent / "meta.json"
    if not meta_path.is_file():
        raise FormatError(f"missing sidecar meta.json next to {path}")
    meta = json.loads(meta_path.read_text())
    return HeatmapStack(
        maps=maps,
        method=meta["method"],
        class_index=int(meta["class_index"]),
        model_id=meta["model_id"],
        normalization=meta["normalization"],
    )
