"""Level-set contour extraction from heatmaps.

Each frame of a heatmap stack is binarized at every requested level and the
outer boundary of every 8-connected region is traced along pixel edges
(4-connected background). Polylines therefore run through half-integer
corner coordinates, pixel (row r, column c) covering the square
[c-0.5, c+0.5] x [r-0.5, r+0.5]. This makes interior membership of pixel
centers exact: no center ever falls on a polygon edge.

Contours carry a nesting parent (containment across and within levels) and
the mean heatmap intensity over their interior. Together these address the
two classic weaknesses of single-level contour views: ambiguous nesting and
invisible activation strength.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .heatmap import HeatmapStack

# Corner-lattice step vectors in clockwise screen order: east, south, west, north.
_DIRS = ((0, 1), (1, 0), (0, -1), (-1, 0))

DEFAULT_LEVELS = (0.25, 0.5, 0.75)


@dataclass(eq=False)
class Contour:
    """One closed boundary polyline at a single threshold level.

    ``points`` is closed (first point repeated at the end) and uses (x, y)
    pixel coordinates. ``parent`` indexes the enclosing contour within the
    same frame, or None. ``interior`` is the boolean pixel mask enclosed by
    the polyline (holes included); it is kept in memory but not serialized.
    """

    level: float
    points: list[tuple[float, float]]
    parent: int | None
    mean_intensity: float
    interior: np.ndarray | None = field(default=None, repr=False)

    @property
    def area(self) -> float:
        if self.interior is not None:
            return float(self.interior.sum())
        return polygon_area(self.points)


@dataclass(eq=False)
class ContourSet:
    """Per-frame contour lists for a whole heatmap stack."""

    frames: list[list[Contour]]
    shape_hw: tuple[int, int] | None = None

    def levels(self) -> list[float]:
        return sorted({c.level for frame in self.frames for c in frame})


def polygon_area(points: list[tuple[float, float]]) -> float:
    """Absolute shoelace area of a closed polyline."""
    arr = np.asarray(points, dtype=np.float64)
    x, y = arr[:-1, 0], arr[:-1, 1]
    xn, yn = arr[1:, 0], arr[1:, 1]
    return abs(float(np.sum(x * yn - xn * y)) / 2.0)


def _label_components(mask: np.ndarray) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """8-connected labeling; returns labels and per-component start pixels.

    Components are numbered in raster order of their first pixel, which for
    each component is its topmost-then-leftmost pixel.
    """
    h, w = mask.shape
    labels = np.full((h, w), -1, dtype=np.int32)
    starts: list[tuple[int, int]] = []
    for r, c in np.argwhere(mask):
        if labels[r, c] >= 0:
            continue
        label = len(starts)
        starts.append((int(r), int(c)))
        stack = [(int(r), int(c))]
        labels[r, c] = label
        while stack:
            pr, pc = stack.pop()
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    nr, nc = pr + dr, pc + dc
                    if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] and labels[nr, nc] < 0:
                        labels[nr, nc] = label
                        stack.append((nr, nc))
    return labels, starts


def _trace_boundary(comp: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Follow the outer border of one component along pixel cracks.

    ``start`` must be the component's topmost-leftmost pixel. The walk keeps
    foreground on its right; at saddle corners it turns left, which treats
    diagonally touching foreground as connected (8-connected regions,
    4-connected background). Returns corner lattice indices (i, j) where the
    corner sits at coordinate (x = j - 0.5, y = i - 0.5).
    """
    h, w = comp.shape

    def fg(r: int, c: int) -> bool:
        return 0 <= r < h and 0 <= c < w and bool(comp[r, c])

    start_corner = (start[0], start[1])
    d0 = 0  # east along the top edge of the start pixel
    corners = []
    corner, d = start_corner, d0
    while True:
        corners.append(corner)
        corner = (corner[0] + _DIRS[d][0], corner[1] + _DIRS[d][1])
        i, j = corner
        nw, ne = fg(i - 1, j - 1), fg(i - 1, j)
        sw, se = fg(i, j - 1), fg(i, j)
        if d == 0:
            ahead_left, ahead_right = ne, se
        elif d == 1:
            ahead_left, ahead_right = se, sw
        elif d == 2:
            ahead_left, ahead_right = sw, nw
        else:
            ahead_left, ahead_right = nw, ne
        if ahead_left:
            d = (d - 1) % 4
        elif not ahead_right:
            d = (d + 1) % 4
        if corner == start_corner and d == d0:
            break
    return corners


def _merge_collinear(corners: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Drop interior points of straight runs from a closed corner cycle."""
    n = len(corners)
    kept = []
    for idx, cur in enumerate(corners):
        prev = corners[idx - 1]
        nxt = corners[(idx + 1) % n]
        d_in = (cur[0] - prev[0], cur[1] - prev[1])
        d_out = (nxt[0] - cur[0], nxt[1] - cur[1])
        if d_in != d_out:
            kept.append(cur)
    return kept


def _fill_holes(comp: np.ndarray) -> np.ndarray:
    """Pixels enclosed by the component's outer boundary (4-connected bg)."""
    bg = ~comp
    reach = np.zeros_like(bg)
    reach[0, :] = bg[0, :]
    reach[-1, :] |= bg[-1, :]
    reach[:, 0] |= bg[:, 0]
    reach[:, -1] |= bg[:, -1]
    while True:
        grown = reach.copy()
        grown[1:, :] |= reach[:-1, :]
        grown[:-1, :] |= reach[1:, :]
        grown[:, 1:] |= reach[:, :-1]
        grown[:, :-1] |= reach[:, 1:]
        grown &= bg
        if np.array_equal(grown, reach):
            break
        reach = grown
    return ~reach


def _bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    return int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1])


def _assign_parents(contours: list[Contour]) -> None:
    """Link each contour to its tightest enclosing contour, if any.

    A candidate parent must enclose the child's interior and either sit at a
    strictly lower level or, within the same level, be a strict superset.
    Among candidates the smallest interior wins (ties: the highest level).
    """
    infos = []
    for c in contours:
        infos.append((c.interior, int(c.interior.sum()), _bbox(c.interior)))
    for child_idx, child in enumerate(contours):
        c_mask, c_area, c_box = infos[child_idx]
        best = None
        best_key = None
        for parent_idx, parent in enumerate(contours):
            if parent_idx == child_idx:
                continue
            p_mask, p_area, p_box = infos[parent_idx]
            if p_area < c_area:
                continue
            if parent.level == child.level and p_area == c_area:
                continue
            if p_box[0] > c_box[0] or p_box[1] < c_box[1] or p_box[2] > c_box[2] or p_box[3] < c_box[3]:
                continue
            if parent.level > child.level:
                continue
            if (c_mask & ~p_mask).any():
                continue
            key = (p_area, -parent.level, parent_idx)
            if best_key is None or key < best_key:
                best, best_key = parent_idx, key
        child.parent = best


def extract_contours(stack: HeatmapStack, levels: list[float] | tuple[float, ...] = DEFAULT_LEVELS) -> ContourSet:
    """Trace level-set contours for every frame of a heatmap stack."""
    levels = [float(v) for v in levels]
    if not levels:
        raise ValueError("levels must be nonempty")
    if any(not 0.0 < v < 1.0 for v in levels):
        raise ValueError(f"levels must lie strictly inside (0, 1), got {levels}")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError(f"levels must be strictly increasing, got {levels}")

    t, h, w = stack.maps.shape
    frames: list[list[Contour]] = []
    for ti in range(t):
        frame_map = stack.maps[ti]
        contours: list[Contour] = []
        for level in levels:
            mask = frame_map >= level
            if not mask.any():
                continue
            labels, starts = _label_components(mask)
            for comp_id, start in enumerate(starts):
                comp = labels == comp_id
                corners = _merge_collinear(_trace_boundary(comp, start))
                points = [(j - 0.5, i - 0.5) for i, j in corners]
                points.append(points[0])
                interior = _fill_holes(comp)
                contours.append(
                    Contour(
                        level=level,
                        points=points,
                        parent=None,
                        mean_intensity=float(frame_map[interior].mean()),
                        interior=interior,
                    )
                )
        _assign_parents(contours)
        frames.append(contours)
    return ContourSet(frames=frames, shape_hw=(h, w))


def level_interior_union(frame_contours: list[Contour], level: float, shape_hw: tuple[int, int]) -> np.ndarray:
    """Union of contour interiors at one level within one frame."""
    union = np.zeros(shape_hw, dtype=bool)
    for contour in frame_contours:
        if contour.level == level and contour.interior is not None:
            union |= contour.interior
    return union


def contour_set_to_json(contour_set: ContourSet) -> str:
    """Serialize to the stable JSON schema (interiors are not persisted)."""
    obj = {
        "frames": [
            {
                "contours": [
                    {
                        "level": contour.level,
                        "parent": contour.parent,
                        "mean_intensity": contour.mean_intensity,
                        "points": [[float(x), float(y)] for x, y in contour.points],
                    }
                    for contour in frame
                ]
            }
            for frame in contour_set.frames
        ]
    }
    return json.dumps(obj, indent=2) + "\n"


def contour_set_from_json(text: str) -> ContourSet:
    obj = json.loads(text)
    frames = []
    for frame in obj["frames"]:
        frames.append(
            [
                Contour(
                    level=float(c["level"]),
                    points=[(float(x), float(y)) for x, y in c["points"]],
                    parent=c["parent"],
                    mean_intensity=float(c["mean_intensity"]),
                )
                for c in frame["contours"]
            ]
        )
    return ContourSet(frames=frames)


def write_contour_set(contour_set: ContourSet, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(contour_set_to_json(contour_set))
    return path
