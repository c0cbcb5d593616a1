"""Small numpy image helpers: resizing, color ramps, uint8 conversion."""

from __future__ import annotations

import numpy as np


def bilinear_resize(img: np.ndarray, target_hw: tuple[int, int]) -> np.ndarray:
    """Resize an (H, W) or (H, W, C) float array with bilinear interpolation.

    Sampling uses half-pixel centers with edge clamping, so resizing to the
    input size is an exact identity and constant images stay constant.
    """
    th, tw = int(target_hw[0]), int(target_hw[1])
    if th <= 0 or tw <= 0:
        raise ValueError(f"target dimensions must be positive, got {(th, tw)}")
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    if img.ndim != 3:
        raise ValueError(f"expected a 2-d or 3-d array, got shape {img.shape}")
    h, w, _ = img.shape
    if (h, w) == (th, tw):
        out = img.copy()
        return out[:, :, 0] if squeeze else out

    ys = (np.arange(th, dtype=np.float64) + 0.5) * (h / th) - 0.5
    xs = (np.arange(tw, dtype=np.float64) + 0.5) * (w / tw) - 0.5
    ys = np.clip(ys, 0.0, h - 1.0)
    xs = np.clip(xs, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]

    top = img[y0][:, x0] * (1.0 - fx) + img[y0][:, x1] * fx
    bot = img[y1][:, x0] * (1.0 - fx) + img[y1][:, x1] * fx
    out = (top * (1.0 - fy) + bot * fy).astype(img.dtype)
    return out[:, :, 0] if squeeze else out


def heat_ramp(values: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] to an RGB ramp from blue (0) to red (1).

    Hue runs 240 degrees (blue) down to 0 (red) at full saturation and value.
    Returns floats in [0, 1] with one extra trailing RGB axis.
    """
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    hue = (1.0 - v) * 240.0 / 60.0  # sector in [0, 4]
    sector = np.floor(hue).astype(int)
    frac = hue - sector
    r = np.zeros_like(v)
    g = np.zeros_like(v)
    b = np.zeros_like(v)
    # Sectors of the HSV wheel between red (0) and blue (4).
    m = sector == 0  # red -> yellow
    r[m], g[m], b[m] = 1.0, frac[m], 0.0
    m = sector == 1  # yellow -> green
    r[m], g[m], b[m] = 1.0 - frac[m], 1.0, 0.0
    m = sector == 2  # green -> cyan
    r[m], g[m], b[m] = 0.0, 1.0, frac[m]
    m = sector >= 3  # cyan -> blue
    mf = np.where(sector > 3, 1.0, frac)
    r[m], g[m], b[m] = 0.0, 1.0 - mf[m], 1.0
    return np.stack([r, g, b], axis=-1)


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Convert floats in [0, 1] to uint8 with round-to-nearest."""
    return np.clip(np.round(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def from_uint8(img: np.ndarray) -> np.ndarray:
    """Convert uint8 pixels to float32 in [0, 1]."""
    return (np.asarray(img, dtype=np.float64) / 255.0).astype(np.float32)


def ensure_rgb(frame: np.ndarray) -> np.ndarray:
    """Return an (H, W, 3) view of a single- or three-channel frame."""
    if frame.ndim != 3 or frame.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W, 1) or (H, W, 3), got {frame.shape}")
    if frame.shape[2] == 3:
        return frame
    return np.repeat(frame, 3, axis=2)
