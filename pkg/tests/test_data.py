import json

import numpy as np
import pytest

from tdxviz import (
    DatasetSpec,
    EmptyInputError,
    FormatError,
    ShapeError,
    VideoSequence,
    generate_synthetic,
    load_dataset,
    load_sequence,
    preprocess,
    save_dataset,
    save_sequence,
)
from conftest import centroid_track


def make_spec(**kwargs):
    defaults = dict(num_sequences=2, frames_per_sequence=8, height=32, width=32,
                    classes=("normal", "fight"), seed=7)
    defaults.update(kwargs)
    return DatasetSpec(**defaults)


class TestLoadSequence:
    def test_identical_gray_frames(self, tmp_path):
        frames = np.full((8, 32, 32, 1), 0.5, dtype=np.float32)
        save_sequence(VideoSequence(frames, "normal", {}), tmp_path / "seq")
        loaded = load_sequence(tmp_path / "seq")
        assert loaded.frames.shape == (8, 32, 32, 1)
        assert loaded.label == "normal"
        # 0.5 is not exactly representable on the uint8 grid
        assert np.abs(loaded.frames - 0.5).max() <= 1 / 255

    def test_missing_manifest(self, tmp_path):
        (tmp_path / "seq").mkdir()
        with pytest.raises(FormatError):
            load_sequence(tmp_path / "seq")

    def test_mixed_frame_sizes(self, tmp_path):
        d = tmp_path / "seq"
        save_sequence(VideoSequence(np.zeros((2, 16, 16, 1), np.float32), "x", {}), d)
        from PIL import Image

        Image.fromarray(np.zeros((8, 8), np.uint8), mode="L").save(d / "frame_0001.png")
        with pytest.raises(ShapeError):
            load_sequence(d)

    def test_zero_frames(self, tmp_path):
        d = tmp_path / "seq"
        d.mkdir()
        (d / "manifest.json").write_text(json.dumps({"label": "x", "frames": [], "seed": None}))
        with pytest.raises(EmptyInputError):
            load_sequence(d)

    def test_unsorted_manifest_rejected(self, tmp_path):
        d = tmp_path / "seq"
        save_sequence(VideoSequence(np.zeros((2, 8, 8, 1), np.float32), "x", {}), d)
        manifest = json.loads((d / "manifest.json").read_text())
        manifest["frames"] = manifest["frames"][::-1]
        (d / "manifest.json").write_text(json.dumps(manifest))
        with pytest.raises(FormatError):
            load_sequence(d)

    def test_round_trip_matches_generator_output(self, tmp_path):
        seqs = generate_synthetic(make_spec())
        save_sequence(seqs[0], tmp_path / "seq")
        loaded = load_sequence(tmp_path / "seq")
        assert np.abs(loaded.frames - seqs[0].frames).max() <= 1 / 255

    def test_never_nan_or_inf(self, tmp_path):
        seqs = generate_synthetic(make_spec())
        save_sequence(seqs[-1], tmp_path / "seq")
        loaded = preprocess(load_sequence(tmp_path / "seq"), (16, 16))
        assert np.isfinite(loaded.frames).all()


class TestPreprocess:
    def test_downsize_shape(self):
        seq = VideoSequence(np.zeros((8, 64, 64, 1), np.float32), "x", {})
        out = preprocess(seq, (32, 32))
        assert out.frames.shape == (8, 32, 32, 1)

    def test_identity_resize_exact(self):
        rng = np.random.default_rng(0)
        seq = VideoSequence(rng.uniform(0, 1, (3, 16, 16, 1)).astype(np.float32), "x", {})
        out = preprocess(seq, (16, 16))
        assert np.array_equal(out.frames, seq.frames)

    def test_constant_preserved(self):
        seq = VideoSequence(np.full((2, 20, 20, 1), 0.7, np.float32), "x", {})
        out = preprocess(seq, (13, 9))
        assert np.abs(out.frames - 0.7).max() <= 1e-6

    def test_bad_target_dims(self):
        seq = VideoSequence(np.zeros((2, 16, 16, 1), np.float32), "x", {})
        with pytest.raises(ValueError):
            preprocess(seq, (0, 16))
        with pytest.raises(ValueError):
            preprocess(seq, (4, 4))


class TestGenerateSynthetic:
    def test_counts_per_class(self):
        seqs = generate_synthetic(make_spec())
        assert len(seqs) == 4
        assert sum(1 for s in seqs if s.label == "normal") == 2
        assert sum(1 for s in seqs if s.label == "fight") == 2

    def test_bit_identical_on_same_spec(self):
        a = generate_synthetic(make_spec())
        b = generate_synthetic(make_spec())
        for x, y in zip(a, b):
            assert np.array_equal(x.frames, y.frames)
            assert x.label == y.label

    def test_centroid_displacements(self):
        seqs = generate_synthetic(make_spec(num_sequences=10, classes=("normal", "fight", "gunshot")))
        for seq in seqs:
            steps = np.linalg.norm(np.diff(centroid_track(seq), axis=0), axis=1)
            if seq.label == "normal":
                assert steps.max() <= 1.0 + 1e-9
            else:
                assert steps.max() >= 8.0

    def test_too_short_sequence_rejected(self):
        with pytest.raises(ValueError):
            make_spec(frames_per_sequence=3)

    def test_requires_normal_class(self):
        with pytest.raises(ValueError):
            make_spec(classes=("fight", "gunshot"))

    def test_values_on_uint8_grid(self):
        seqs = generate_synthetic(make_spec())
        arr = seqs[0].frames
        assert np.abs(arr * 255 - np.round(arr * 255)).max() < 1e-4

    def test_separability_probe(self):
        # A threshold on mean inter-frame difference must separate normal
        # from anomaly almost perfectly.
        seqs = generate_synthetic(make_spec(num_sequences=50, classes=("normal", "fight", "gunshot")))
        feature = np.array([np.abs(np.diff(s.frames, axis=0)).mean() for s in seqs])
        is_anomaly = np.array([s.label != "normal" for s in seqs])
        best = max(np.mean((feature > t) == is_anomaly) for t in np.unique(feature))
        assert best >= 0.95


class TestDatasetIO:
    def test_root_layout_and_reload(self, tmp_path):
        seqs = generate_synthetic(make_spec())
        root = save_dataset(seqs, tmp_path / "data")
        assert (root / "normal" / "0000" / "manifest.json").is_file()
        assert (root / "fight" / "0001" / "frame_0000.png").is_file()
        loaded = load_dataset(root)
        assert len(loaded) == 4
        assert {s.label for s in loaded} == {"normal", "fight"}

    def test_empty_root(self, tmp_path):
        (tmp_path / "data").mkdir()
        with pytest.raises(EmptyInputError):
            load_dataset(tmp_path / "data")
