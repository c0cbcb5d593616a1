import numpy as np
import pytest
import torch

from tdxviz import (
    ConfigError,
    EmptyInputError,
    ModelConfig,
    ShapeError,
    TrainingError,
    VideoSequence,
    build_model,
    forward,
    load_checkpoint,
    predict_batch,
    save_checkpoint,
    time_distributed_apply,
    train,
)
from tdxviz.model import TinyCnnBackbone, Vgg19ShapedBackbone
from conftest import random_sequence


def small_config(**kwargs):
    defaults = dict(backbone="tiny-cnn", gru_units=8, dense_width=16,
                    classes=("a", "b"), input_hw=(8, 8), channels=1, seed=1)
    defaults.update(kwargs)
    return ModelConfig(**defaults)


class TestConfig:
    def test_defaults_match_reference_configuration(self):
        config = ModelConfig()
        assert config.gru_units == 1024
        assert config.gru_dropout == 0.5
        assert config.mlp_blocks == 3
        assert config.mlp_dropout == 0.5
        assert config.dense_width == 256

    def test_validation(self):
        with pytest.raises(ConfigError):
            small_config(classes=("only",))
        with pytest.raises(ConfigError):
            small_config(gru_dropout=1.0)
        with pytest.raises(ConfigError):
            small_config(mlp_blocks=0)

    def test_unknown_backbone(self):
        with pytest.raises(ConfigError):
            build_model(small_config(backbone="resnet"))

    def test_vgg_needs_larger_input(self):
        with pytest.raises(ConfigError):
            build_model(small_config(backbone="vgg19-shaped", input_hw=(16, 16)))


class TestBuildModel:
    def test_block_count_in_architecture(self):
        model = build_model(small_config(mlp_blocks=3))
        linears = [m for m in model.net.blocks if isinstance(m, torch.nn.Linear)]
        dropouts = [m for m in model.net.blocks if isinstance(m, torch.nn.Dropout)]
        assert len(linears) == 3
        assert len(dropouts) == 3

    def test_gru_width(self):
        model = build_model(small_config(gru_units=1024, gru_dropout=0.5, input_hw=(16, 16)))
        assert model.net.gru.hidden_size == 1024

    def test_deterministic_initialization(self):
        a = build_model(small_config(seed=5))
        b = build_model(small_config(seed=5))
        for (na, pa), (nb, pb) in zip(a.net.state_dict().items(), b.net.state_dict().items()):
            assert na == nb
            assert torch.equal(pa, pb)

    def test_backbone_output_shape(self):
        model = build_model(small_config(input_hw=(32, 32)))
        assert model.backbone_output_shape == (8, 8, 16)
        vgg = build_model(small_config(backbone="vgg19-shaped", input_hw=(64, 64)))
        assert vgg.backbone_output_shape == (2, 2, 512)


class TestTimeDistributed:
    @pytest.mark.parametrize("backbone_cls,hw,ch", [(TinyCnnBackbone, 16, 1), (Vgg19ShapedBackbone, 32, 3)])
    def test_matches_reshape_oracle(self, backbone_cls, hw, ch):
        torch.manual_seed(0)
        backbone = backbone_cls(ch).eval()
        x = torch.rand((2, 3, ch, hw, hw), generator=torch.Generator().manual_seed(1))
        with torch.no_grad():
            per_frame = time_distributed_apply(backbone, x)
            # independent oracle: fold time into the batch axis
            flat = backbone(x.reshape(6, ch, hw, hw)).reshape(2, 3, *per_frame.shape[2:])
        assert (per_frame - flat).abs().max().item() <= 1e-5

    def test_single_frame_matches_plain_application(self):
        torch.manual_seed(0)
        backbone = TinyCnnBackbone(1).eval()
        x = torch.rand((2, 1, 1, 8, 8), generator=torch.Generator().manual_seed(2))
        with torch.no_grad():
            wrapped = time_distributed_apply(backbone, x)
            plain = backbone(x[:, 0])
        assert torch.equal(wrapped[:, 0], plain)

    def test_frame_permutation_equivariance(self):
        torch.manual_seed(0)
        backbone = TinyCnnBackbone(1).eval()
        x = torch.rand((1, 5, 1, 8, 8), generator=torch.Generator().manual_seed(3))
        perm = torch.tensor([4, 2, 0, 1, 3])
        with torch.no_grad():
            direct = time_distributed_apply(backbone, x[:, perm])
            permuted = time_distributed_apply(backbone, x)[:, perm]
        assert torch.equal(direct, permuted)

    def test_rank_mismatch(self):
        with pytest.raises(ShapeError):
            time_distributed_apply(TinyCnnBackbone(1), torch.zeros(4, 4))


class TestForward:
    def test_scores_sum_to_one(self, tiny_two_class_model):
        seq = random_sequence((3, 8, 8, 1), seed=0)
        scores = forward(tiny_two_class_model, seq)
        assert scores.shape == (2,)
        assert abs(scores.sum() - 1.0) <= 1e-5
        assert (scores >= 0).all() and (scores <= 1).all()

    def test_deterministic_in_eval_mode(self, tiny_two_class_model):
        seq = random_sequence((3, 8, 8, 1), seed=1)
        a = forward(tiny_two_class_model, seq)
        b = forward(tiny_two_class_model, seq)
        assert np.array_equal(a, b)

    def test_shape_mismatch(self, tiny_two_class_model):
        with pytest.raises(ShapeError):
            forward(tiny_two_class_model, random_sequence((3, 16, 16, 1), seed=2))

    def test_desk_scale_model_accuracy(self, desk_model, desk_test_data, desk_classes):
        probs = predict_batch(desk_model, desk_test_data)
        predictions = [desk_classes[i] for i in probs.argmax(axis=1)]
        accuracy = np.mean([p == s.label for p, s in zip(predictions, desk_test_data)])
        assert accuracy >= 0.9


class TestTrain:
    def make_tiny_dataset(self, n=6):
        rng = np.random.default_rng(0)
        out = []
        for i in range(n):
            frames = rng.uniform(0.1, 0.9, size=(3, 8, 8, 1)).astype(np.float32)
            out.append(VideoSequence(frames, "a" if i % 2 else "b", {}))
        return out

    def test_zero_lr_keeps_parameters(self):
        model = build_model(small_config())
        before = {k: v.clone() for k, v in model.net.state_dict().items()}
        train(model, self.make_tiny_dataset(), epochs=1, lr=0.0)
        for k, v in model.net.state_dict().items():
            assert torch.equal(before[k], v)

    def test_loss_not_increasing_overall(self, desk_model):
        log = desk_model.training_log
        assert log[-1]["loss"] <= log[0]["loss"]
        assert len(log) == 20

    def test_final_train_accuracy(self, desk_model, desk_train_data, desk_classes):
        probs = predict_batch(desk_model, desk_train_data)
        predictions = [desk_classes[i] for i in probs.argmax(axis=1)]
        accuracy = np.mean([p == s.label for p, s in zip(predictions, desk_train_data)])
        assert accuracy >= 0.95

    def test_empty_dataset(self):
        with pytest.raises(EmptyInputError):
            train(build_model(small_config()), [], epochs=1)

    def test_mixed_shapes(self):
        data = [random_sequence((2, 8, 8, 1), 0), random_sequence((3, 8, 8, 1), 1)]
        with pytest.raises(ShapeError):
            train(build_model(small_config()), data, epochs=1)

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            train(build_model(small_config()), [random_sequence((2, 8, 8, 1), 0, label="zzz")], epochs=1)

    def test_divergence_raises_with_epoch(self):
        model = build_model(small_config())
        with pytest.raises(TrainingError) as exc:
            train(model, self.make_tiny_dataset(), epochs=3, lr=1e9, optimizer="sgd")
        assert exc.value.epoch is not None

    def test_retrain_reproducible(self):
        data = self.make_tiny_dataset()
        a = train(build_model(small_config(seed=9)), data, epochs=2, lr=1e-3)
        b = train(build_model(small_config(seed=9)), data, epochs=2, lr=1e-3)
        for (ka, va), (kb, vb) in zip(a.net.state_dict().items(), b.net.state_dict().items()):
            assert ka == kb and torch.equal(va, vb)

    def test_bad_optimizer_name(self):
        with pytest.raises(ValueError):
            train(build_model(small_config()), self.make_tiny_dataset(), epochs=1, optimizer="sgdm")


class TestFrameOrderSensitivity:
    def test_reversal_changes_scores_for_some_anomaly(self, desk_model, desk_test_data):
        deltas = []
        for seq in desk_test_data:
            if seq.label == "normal":
                continue
            reversed_seq = VideoSequence(seq.frames[::-1].copy(), seq.label, dict(seq.manifest))
            deltas.append(np.abs(forward(desk_model, seq) - forward(desk_model, reversed_seq)).max())
        assert max(deltas) >= 1e-3


class TestCheckpoint:
    def test_round_trip(self, tmp_path, tiny_two_class_model):
        seq = random_sequence((2, 8, 8, 1), seed=5)
        before = forward(tiny_two_class_model, seq)
        save_checkpoint(tiny_two_class_model, tmp_path / "ckpt")
        loaded = load_checkpoint(tmp_path / "ckpt")
        assert loaded.config == tiny_two_class_model.config
        after = forward(loaded, seq)
        assert np.array_equal(before, after)

    def test_blob_format(self, tmp_path, tiny_two_class_model):
        import json

        save_checkpoint(tiny_two_class_model, tmp_path / "ckpt")
        index = json.loads((tmp_path / "ckpt" / "index.json").read_text())
        state = tiny_two_class_model.net.state_dict()
        assert set(index) == set(state)
        for name, entry in index.items():
            blob = (tmp_path / "ckpt" / entry["file"]).read_bytes()
            arr = np.frombuffer(blob, dtype="<f4").reshape(entry["shape"])
            assert np.array_equal(arr, state[name].numpy().astype("<f4"))

    def test_resave_is_byte_identical(self, tmp_path, tiny_two_class_model):
        save_checkpoint(tiny_two_class_model, tmp_path / "a")
        save_checkpoint(load_checkpoint(tmp_path / "a"), tmp_path / "b")
        for path_a in sorted((tmp_path / "a").iterdir()):
            if path_a.name == "training_log.json":
                continue
            assert path_a.read_bytes() == (tmp_path / "b" / path_a.name).read_bytes()
