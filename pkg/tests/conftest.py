import numpy as np
import pytest

from tdxviz import (
    DatasetSpec,
    ModelConfig,
    VideoSequence,
    build_model,
    generate_synthetic,
    train,
)
from tdxviz.data import shape_mask

DESK_HW = (32, 32)


def centroid_track(seq: VideoSequence) -> np.ndarray:
    """Per-frame centroid of the bright shape, shape (T, 2) as (row, col)."""
    points = []
    for frame in seq.frames:
        ys, xs = np.nonzero(shape_mask(frame))
        points.append((ys.mean(), xs.mean()))
    return np.asarray(points)


def shape_bbox_mask(frame: np.ndarray, dilate: int = 4) -> np.ndarray:
    """Axis-aligned bounding box of the bright shape, dilated, as a mask."""
    mask = shape_mask(frame)
    ys, xs = np.nonzero(mask)
    out = np.zeros(mask.shape, dtype=bool)
    out[
        max(0, ys.min() - dilate) : ys.max() + dilate + 1,
        max(0, xs.min() - dilate) : xs.max() + dilate + 1,
    ] = True
    return out


@pytest.fixture(scope="session")
def desk_train_data():
    spec = DatasetSpec(num_sequences=50, frames_per_sequence=8, height=32, width=32, seed=7)
    return generate_synthetic(spec)


@pytest.fixture(scope="session")
def desk_test_data():
    spec = DatasetSpec(num_sequences=30, frames_per_sequence=8, height=32, width=32, seed=1207)
    return generate_synthetic(spec)


@pytest.fixture(scope="session")
def desk_classes(desk_train_data):
    return tuple(sorted({seq.label for seq in desk_train_data}))


@pytest.fixture(scope="session")
def desk_model(desk_train_data, desk_classes):
    """The reference desk-scale model: tiny backbone, 64-unit GRU, 20 epochs."""
    config = ModelConfig(
        backbone="tiny-cnn",
        gru_units=64,
        classes=desk_classes,
        input_hw=DESK_HW,
        channels=1,
        seed=0,
    )
    model = build_model(config)
    train(model, desk_train_data, epochs=20)
    return model


@pytest.fixture()
def tiny_two_class_model():
    """A small untrained model for fast shape and gradient tests."""
    config = ModelConfig(
        backbone="tiny-cnn",
        gru_units=8,
        dense_width=16,
        classes=("a", "b"),
        input_hw=(8, 8),
        channels=1,
        seed=1,
    )
    return build_model(config)


def random_sequence(shape, seed, label="a") -> VideoSequence:
    rng = np.random.default_rng(seed)
    frames = rng.uniform(0.1, 0.9, size=shape).astype(np.float32)
    return VideoSequence(frames, label, {})
