"""Rendering heatmaps and contour sets over video frames."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .contours import ContourSet
from .data import VideoSequence
from .errors import ShapeError
from .heatmap import HeatmapStack
from .imageops import bilinear_resize, ensure_rgb, heat_ramp, to_uint8

MODES = ("heat", "contour")
HEAT_ALPHA = 0.45

# Stroke colors cycled per threshold level, low to high.
LEVEL_COLORS = (
    (0, 200, 0),
    (255, 160, 0),
    (255, 0, 0),
    (0, 128, 255),
    (200, 0, 200),
    (0, 220, 220),
)


def _heat_frame(frame: np.ndarray, heat: np.ndarray) -> np.ndarray:
    rgb = ensure_rgb(frame).astype(np.float64)
    if heat.shape != rgb.shape[:2]:
        heat = bilinear_resize(heat.astype(np.float64), rgb.shape[:2])
    alpha = (HEAT_ALPHA * np.clip(heat, 0.0, 1.0))[:, :, None]
    blended = rgb * (1.0 - alpha) + heat_ramp(heat) * alpha
    return to_uint8(blended)


def _contour_frame(frame: np.ndarray, contours, level_order: list[float]) -> np.ndarray:
    rgb = to_uint8(ensure_rgb(frame))
    img = Image.fromarray(rgb, mode="RGB")
    draw = ImageDraw.Draw(img)
    for contour in contours:
        color = LEVEL_COLORS[level_order.index(contour.level) % len(LEVEL_COLORS)]
        draw.line([(float(x), float(y)) for x, y in contour.points], fill=color, width=1)
        top = min(contour.points[:-1], key=lambda p: (p[1], p[0]))
        draw.text((top[0], top[1]), f"{contour.mean_intensity:.2f}", fill=color)
    return np.asarray(img)


def render_overlay(
    seq: VideoSequence,
    stack: HeatmapStack,
    mode: str,
    contours: ContourSet | None = None,
    out_dir: str | Path = ".",
) -> list[Path]:
    """Write one overlay PNG per frame, named overlay_<mode>_NNNN.png.

    "heat" blends a blue-to-red ramp over the frame with opacity 0.45 scaled
    by the heatmap value, so zero-valued pixels keep the original frame.
    "contour" draws the contour polylines with per-level stroke colors and
    labels each contour with its mean interior intensity (two decimals) at
    its topmost vertex.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    t = seq.frames.shape[0]
    if stack.maps.shape[0] != t:
        raise ShapeError(
            f"stack has {stack.maps.shape[0]} maps but the sequence has {t} frames"
        )
    if mode == "contour":
        if contours is None:
            raise ValueError("contour mode requires a ContourSet")
        if len(contours.frames) != t:
            raise ShapeError(
                f"contour set covers {len(contours.frames)} frames, expected {t}"
            )
        level_order = contours.levels()

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(t):
        if mode == "heat":
            rendered = _heat_frame(seq.frames[i], stack.maps[i])
        else:
            rendered = _contour_frame(seq.frames[i], contours.frames[i], level_order)
        path = out_dir / f"overlay_{mode}_{i:04d}.png"
        Image.fromarray(rendered, mode="RGB").save(path)
        paths.append(path)
    return paths
