"""Video sequence ingestion, preprocessing, and synthetic dataset generation.

A sequence on disk is a directory of lossless PNG frames plus a
``manifest.json`` holding the label, the ordered frame filenames, and the
generator seed (or null for real footage). A dataset root groups sequence
directories as ``<root>/<class>/<sequence_id>/``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EmptyInputError, FormatError, ShapeError
from .imageops import bilinear_resize, from_uint8, to_uint8

MANIFEST_NAME = "manifest.json"

# Pixel values used by the synthetic generator, chosen on the 1/255 grid so
# that a save/load round trip is exact. Fast motion leaves a dimmer streak
# along its path, like camera motion blur.
_BACKGROUND = np.float32(51 / 255.0)
_SHAPE = np.float32(230 / 255.0)
_TRAIL = np.float32(150 / 255.0)


@dataclass(eq=False)
class VideoSequence:
    """An ordered stack of frames with a label and provenance manifest.

    ``frames`` has shape (T, H, W, C) with float values in [0, 1].
    """

    frames: np.ndarray
    label: str
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        validate_frames(self.frames)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.frames.shape


def validate_frames(frames: np.ndarray) -> None:
    if frames.ndim != 4:
        raise ShapeError(f"frames must be (T, H, W, C), got shape {frames.shape}")
    if frames.shape[0] < 1:
        raise EmptyInputError("sequence must contain at least one frame")
    if frames.shape[3] not in (1, 3):
        raise ShapeError(f"channel count must be 1 or 3, got {frames.shape[3]}")
    if not np.isfinite(frames).all():
        raise ValueError("frames contain NaN or Inf")
    if frames.min() < 0.0 or frames.max() > 1.0:
        raise ValueError("frame values must lie in [0, 1]")


@dataclass(frozen=True)
class DatasetSpec:
    """Parameters of a synthetic moving-shape dataset.

    The same spec (seed included) always regenerates a bit-identical dataset.
    """

    num_sequences: int = 10
    frames_per_sequence: int = 8
    height: int = 64
    width: int = 64
    classes: tuple[str, ...] = ("normal", "fight", "gunshot")
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if "normal" not in self.classes or len(self.classes) < 2:
            raise ValueError("classes must contain 'normal' and at least one anomaly class")
        if self.num_sequences < 1:
            raise ValueError("num_sequences must be positive")
        if self.frames_per_sequence < 4:
            raise ValueError("a sudden event needs at least 4 frames per sequence")
        if self.height < 16 or self.width < 16:
            raise ValueError("synthetic frames must be at least 16x16")


def load_sequence(dir_path: str | Path) -> VideoSequence:
    """Load a frame-directory sequence into memory.

    Frames are decoded in manifest order and converted to float32 in [0, 1].
    """
    dir_path = Path(dir_path)
    manifest_path = dir_path / MANIFEST_NAME
    if not manifest_path.is_file():
        raise FormatError(f"missing {MANIFEST_NAME} in {dir_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"unreadable manifest in {dir_path}: {exc}") from exc
    for key in ("label", "frames"):
        if key not in manifest:
            raise FormatError(f"manifest in {dir_path} lacks required key '{key}'")
    names = list(manifest["frames"])
    if not names:
        raise EmptyInputError(f"manifest in {dir_path} lists zero frames")
    if names != sorted(names):
        raise FormatError(f"manifest frame list in {dir_path} is not in lexicographic order")

    frames = []
    for name in names:
        path = dir_path / name
        if not path.is_file():
            raise FormatError(f"missing frame file {path}")
        with Image.open(path) as img:
            arr = np.asarray(img)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        frames.append(from_uint8(arr))
    first = frames[0].shape
    for name, arr in zip(names, frames):
        if arr.shape != first:
            raise ShapeError(
                f"frame {name} has shape {arr.shape}, expected {first} like the first frame"
            )
    stack = np.stack(frames, axis=0)
    manifest = dict(manifest)
    manifest.setdefault("seed", None)
    manifest["source"] = str(dir_path)
    return VideoSequence(frames=stack, label=str(manifest["label"]), manifest=manifest)


def save_sequence(seq: VideoSequence, dir_path: str | Path) -> Path:
    """Write a sequence as frame_%04d.png files plus a manifest."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    names = []
    for t in range(seq.frames.shape[0]):
        name = f"frame_{t:04d}.png"
        frame = to_uint8(seq.frames[t])
        if frame.shape[2] == 1:
            img = Image.fromarray(frame[:, :, 0], mode="L")
        else:
            img = Image.fromarray(frame, mode="RGB")
        img.save(dir_path / name)
        names.append(name)
    manifest = {
        "label": seq.label,
        "frames": names,
        "seed": seq.manifest.get("seed"),
    }
    (dir_path / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n")
    return dir_path


def preprocess(seq: VideoSequence, target_hw: tuple[int, int]) -> VideoSequence:
    """Bilinearly resize every frame to ``target_hw``; values stay in [0, 1]."""
    th, tw = int(target_hw[0]), int(target_hw[1])
    if th <= 0 or tw <= 0:
        raise ValueError(f"target dimensions must be positive, got {(th, tw)}")
    if th < 8 or tw < 8:
        raise ValueError(f"target dimensions must be at least 8x8, got {(th, tw)}")
    if seq.frames.shape[1:3] == (th, tw):
        return VideoSequence(seq.frames.copy(), seq.label, dict(seq.manifest))
    resized = np.stack([bilinear_resize(f, (th, tw)) for f in seq.frames], axis=0)
    resized = np.clip(resized, 0.0, 1.0)
    return VideoSequence(resized, seq.label, dict(seq.manifest))


def _draw_disk(frame: np.ndarray, center_rc: tuple[int, int], radius: int, value: np.float32 = _SHAPE) -> None:
    h, w = frame.shape[:2]
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    mask = (ys - center_rc[0]) ** 2 + (xs - center_rc[1]) ** 2 <= radius * radius
    np.maximum(frame, np.where(mask, value, np.float32(0.0)), out=frame)


def _anomaly_direction(class_ordinal: int, num_anomalies: int) -> tuple[float, float]:
    # Spread anomaly classes over jump angles between horizontal and vertical
    # so that a sequence model can tell them apart.
    if num_anomalies == 1:
        angle = 0.0
    else:
        angle = (math.pi / 2) * class_ordinal / (num_anomalies - 1)
    return math.cos(angle), math.sin(angle)


def generate_synthetic(spec: DatasetSpec) -> list[VideoSequence]:
    """Generate a deterministic moving-shape video dataset.

    Every sequence shows one bright disk on a dark background. "normal"
    sequences drift the disk at most one pixel per frame. Anomaly sequences
    use the same disk and drift, but from a random onset frame in the first
    half of the clip the disk starts jumping back and forth between its
    position and a point at least a quarter of the frame height away; each
    anomaly class jumps along its own direction. Fast moves leave a dimmer
    motion streak along the path, so sudden motion is also visible within
    single frames, the way blur is in real footage.
    """
    rng = np.random.default_rng(spec.seed)
    h, w, t_len = spec.height, spec.width, spec.frames_per_sequence
    radius = max(2, min(h, w) // 8)
    margin = radius + 1
    jump = max(int(round(max(h, w) / 3.0)), int(math.ceil(h / 4.0)) + 1)
    anomalies = [c for c in spec.classes if c != "normal"]

    sequences = []
    for cls in spec.classes:
        for index in range(spec.num_sequences):
            frames = np.full((t_len, h, w, 1), _BACKGROUND, dtype=np.float32)
            r = int(rng.integers(h // 4, h - h // 4))
            c = int(rng.integers(w // 4, w - w // 4))
            drift = ((0, 1), (0, -1), (1, 0), (-1, 0))[int(rng.integers(0, 4))]
            onset = int(rng.integers(1, max(2, t_len // 2 + 1))) if cls != "normal" else t_len + 1
            base = (r, c)
            jump_vec = None
            for t in range(t_len):
                prev = (r, c)
                if t >= onset:
                    if jump_vec is None:
                        dx, dy = _anomaly_direction(anomalies.index(cls), len(anomalies))
                        dr = int(round(jump * dy))
                        dc = int(round(jump * dx))
                        # Jump toward whichever side has room.
                        if base[0] + dr > h - 1 - margin:
                            dr = -dr
                        if base[1] + dc > w - 1 - margin:
                            dc = -dc
                        jump_vec = (dr, dc)
                    if (t - onset) % 2 == 0:
                        r, c = base[0] + jump_vec[0], base[1] + jump_vec[1]
                    else:
                        r, c = base
                elif t > 0:
                    # One axis-aligned step of at most one pixel, bouncing at
                    # the margins.
                    dr, dc = drift
                    if not margin <= r + dr <= h - 1 - margin:
                        dr = -dr
                    if not margin <= c + dc <= w - 1 - margin:
                        dc = -dc
                    r, c = r + dr, c + dc
                    base = (r, c)
                frame = frames[t, :, :, 0]
                if t > 0 and math.hypot(r - prev[0], c - prev[1]) > 2.0:
                    for frac in (0.25, 0.5, 0.75):
                        streak = (
                            int(round(prev[0] + frac * (r - prev[0]))),
                            int(round(prev[1] + frac * (c - prev[1]))),
                        )
                        _draw_disk(frame, streak, radius, _TRAIL)
                _draw_disk(frame, (r, c), radius)
            manifest = {"seed": spec.seed, "class_index": spec.classes.index(cls), "sequence_index": index}
            sequences.append(VideoSequence(frames=frames, label=cls, manifest=manifest))
    return sequences


def save_dataset(sequences: list[VideoSequence], root: str | Path) -> Path:
    """Write sequences under ``<root>/<class>/<sequence_id>/``."""
    root = Path(root)
    counters: dict[str, int] = {}
    for seq in sequences:
        i = counters.get(seq.label, 0)
        counters[seq.label] = i + 1
        save_sequence(seq, root / seq.label / f"{i:04d}")
    return root


def load_dataset(root: str | Path) -> list[VideoSequence]:
    """Load every sequence under a dataset root, ordered by class then id."""
    root = Path(root)
    if not root.is_dir():
        raise FormatError(f"dataset root {root} is not a directory")
    sequences = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for seq_dir in sorted(p for p in class_dir.iterdir() if p.is_dir()):
            sequences.append(load_sequence(seq_dir))
    if not sequences:
        raise EmptyInputError(f"dataset root {root} contains no sequences")
    return sequences


def shape_mask(frame: np.ndarray) -> np.ndarray:
    """Boolean mask of the bright synthetic shape in one (H, W, C) frame.

    The threshold sits above the motion-streak intensity, so only the disk
    itself counts as the shape.
    """
    threshold = (float(_TRAIL) + float(_SHAPE)) / 2.0
    return frame.max(axis=2) > threshold
