"""Hyperparameter sweeps over GRU width, dropout rate, and MLP block count.

Each sweep point trains a fresh model with one field changed from the base
configuration, evaluates it on a deterministic 80/20 split, and explains a
fixed probe sequence so activation behavior can be compared across
configurations. Dropout values are given in percent.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import VideoSequence
from .errors import TrainingError
from .gradcam import capture_bundle, gradcam
from .heatmap import HeatmapStack
from .metrics import MetricsRow, compute_metrics, failed_row, rows_to_csv
from .model import ModelConfig, build_model, predict_batch, train

AXES = ("neurons", "dropout", "blocks")

# Default value grids for the three sweep axes.
DEFAULT_GRIDS = {
    "neurons": (8, 16, 32, 64, 128, 256, 512, 1024, 2048),
    "dropout": (0, 25, 50, 75),
    "blocks": (2, 3, 4),
}


@dataclass
class SweepSpec:
    axis: str
    values: tuple[float, ...]
    base_config: ModelConfig
    dataset: list[VideoSequence]
    epochs: int = 12
    seed: int = 0
    lr: float = 1e-3
    batch_size: int = 8
    optimizer: str = "adam"
    train_fraction: float = 0.8

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        self.values = tuple(self.values)
        if not self.values:
            raise ValueError("values must be nonempty")


@dataclass
class SweepResult:
    rows: list[MetricsRow]
    probe_stacks: dict[str, HeatmapStack] = field(default_factory=dict)
    probe_sequence: VideoSequence | None = None
    failed: list[str] = field(default_factory=list)


def format_value(value: float) -> str:
    """Format a swept value the way it appears in the CSV key column."""
    return str(int(value)) if float(value) == int(value) else str(float(value))


def apply_axis(config: ModelConfig, axis: str, value: float) -> ModelConfig:
    if axis == "neurons":
        return replace(config, gru_units=int(value))
    if axis == "dropout":
        fraction = float(value) / 100.0
        return replace(config, gru_dropout=fraction, mlp_dropout=fraction)
    if axis == "blocks":
        return replace(config, mlp_blocks=int(value))
    raise ValueError(f"axis must be one of {AXES}, got {axis!r}")


def split_dataset(
    dataset: list[VideoSequence],
    classes: tuple[str, ...],
    train_fraction: float = 0.8,
    seed: int = 0,
) -> tuple[list[VideoSequence], list[VideoSequence]]:
    """Deterministic stratified split, class by class."""
    rng = np.random.default_rng(seed)
    train_set: list[VideoSequence] = []
    test_set: list[VideoSequence] = []
    for cls in classes:
        indices = [i for i, seq in enumerate(dataset) if seq.label == cls]
        order = rng.permutation(len(indices))
        cut = int(round(train_fraction * len(indices)))
        cut = min(max(cut, 1), len(indices) - 1) if len(indices) > 1 else len(indices)
        for pos in order[:cut]:
            train_set.append(dataset[indices[pos]])
        for pos in order[cut:]:
            test_set.append(dataset[indices[pos]])
    return train_set, test_set


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Train and evaluate one model per swept value; never drops a row.

    Diverging configurations yield a row of nan metrics and are listed in
    ``failed``; the sweep continues with the remaining values.
    """
    classes = spec.base_config.classes
    train_set, test_set = split_dataset(spec.dataset, classes, spec.train_fraction, spec.seed)
    probe = test_set[0]
    labels = [seq.label for seq in test_set]

    result = SweepResult(rows=[], probe_sequence=probe)
    for value in spec.values:
        key = format_value(value)
        config = replace(apply_axis(spec.base_config, spec.axis, value), seed=spec.seed)
        model = build_model(config)
        try:
            train(model, train_set, epochs=spec.epochs, lr=spec.lr, batch_size=spec.batch_size, optimizer=spec.optimizer)
        except TrainingError:
            result.rows.append(failed_row(key))
            result.failed.append(key)
            continue
        probs = predict_batch(model, test_set)
        predictions = [classes[i] for i in probs.argmax(axis=1)]
        result.rows.append(compute_metrics(predictions, labels, classes, config_key=key))

        probe_class = int(probs[0].argmax())  # the probe is test_set[0]
        bundle = capture_bundle(model, probe, probe_class)
        result.probe_stacks[key] = gradcam(bundle, config.input_hw)
    return result


def write_sweep_csv(result: SweepResult, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(rows_to_csv(result.rows))
    return path
