"""Sequence classifier: per-frame CNN backbone, GRU, MLP head.

The backbone is applied to every frame independently through a
time-distributed wrapper, so frame features never mix inside the
convolutional stage; all temporal aggregation happens in the GRU.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .data import VideoSequence
from .errors import ConfigError, EmptyInputError, ShapeError, TrainingError

BACKBONES = ("tiny-cnn", "vgg19-shaped")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and training-reproducibility knobs.

    Defaults follow the reference configuration: a 1024-unit GRU with 50%
    dropout feeding three dense+dropout blocks.
    """

    backbone: str = "tiny-cnn"
    gru_units: int = 1024
    gru_dropout: float = 0.5
    mlp_blocks: int = 3
    mlp_dropout: float = 0.5
    dense_width: int = 256
    classes: tuple[str, ...] = ("normal", "fight", "gunshot")
    input_hw: tuple[int, int] = (64, 64)
    channels: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "input_hw", tuple(int(v) for v in self.input_hw))
        if len(self.classes) < 2:
            raise ConfigError("need at least two classes")
        if self.gru_units < 1:
            raise ConfigError("gru_units must be positive")
        if not 0.0 <= self.gru_dropout < 1.0:
            raise ConfigError("gru_dropout must lie in [0, 1)")
        if self.mlp_blocks < 1:
            raise ConfigError("mlp_blocks must be positive")
        if not 0.0 <= self.mlp_dropout < 1.0:
            raise ConfigError("mlp_dropout must lie in [0, 1)")
        if self.dense_width < 1:
            raise ConfigError("dense_width must be positive")
        if self.channels not in (1, 3):
            raise ConfigError("channels must be 1 or 3")


def time_distributed_apply(submodel: nn.Module, seq_batch: torch.Tensor) -> torch.Tensor:
    """Apply ``submodel`` to every frame of a (B, T, ...) batch independently.

    Output index [b, t] is exactly ``submodel(seq_batch[:, t])[b]``; no
    information flows between frames here.
    """
    if seq_batch.dim() < 3:
        raise ShapeError(f"expected at least (B, T, ...) input, got shape {tuple(seq_batch.shape)}")
    outputs = [submodel(seq_batch[:, t]) for t in range(seq_batch.shape[1])]
    return torch.stack(outputs, dim=1)


class TinyCnnBackbone(nn.Module):
    """Two conv stages (8 and 16 channels) with average pooling.

    Inputs in [0, 1] are mapped to [-1, 1] before the first convolution.
    """

    widths = (8, 16)

    def __init__(self, channels: int):
        super().__init__()
        layers = []
        previous = channels
        for width in self.widths:
            layers += [nn.Conv2d(previous, width, 3, padding=1), nn.ReLU(), nn.AvgPool2d(2)]
            previous = width
        self.stages = nn.Sequential(*layers)

    def forward(self, x):
        return self.stages(x * 2.0 - 1.0)


class Vgg19ShapedBackbone(nn.Module):
    """Five conv stages with the VGG19 stage widths and max pooling."""

    widths = (64, 128, 256, 512, 512)

    def __init__(self, channels: int):
        super().__init__()
        layers = []
        previous = channels
        for width in self.widths:
            layers += [nn.Conv2d(previous, width, 3, padding=1), nn.ReLU(), nn.MaxPool2d(2)]
            previous = width
        self.stages = nn.Sequential(*layers)

    def forward(self, x):
        return self.stages(x * 2.0 - 1.0)


_BACKBONE_CLASSES = {"tiny-cnn": TinyCnnBackbone, "vgg19-shaped": Vgg19ShapedBackbone}
_MIN_INPUT = {"tiny-cnn": 4, "vgg19-shaped": 32}


class TimeSharedDropout(nn.Module):
    """Inverted dropout over (B, T, F) with one mask per sequence.

    The mask is shared across time steps, so a dropped feature is dropped in
    every frame of the sequence; this is the recurrent-input flavor of
    dropout, which does not scramble temporal differences.
    """

    def __init__(self, p: float):
        super().__init__()
        self.p = float(p)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if not self.training or self.p == 0.0:
            return x
        keep = torch.bernoulli(
            torch.full((x.shape[0], 1, x.shape[2]), 1.0 - self.p, device=x.device, dtype=x.dtype)
        )
        return x * keep / (1.0 - self.p)


class SequenceClassifier(nn.Module):
    """time_distributed(backbone) -> GRU -> dense blocks -> class logits.

    The flattened per-frame features are centered (zero mean within each
    frame) before the GRU so the recurrent stage sees structure rather than
    the large constant response of the background.
    """

    def __init__(self, config: ModelConfig, feature_hw: tuple[int, int], feature_channels: int):
        super().__init__()
        self.backbone = _BACKBONE_CLASSES[config.backbone](config.channels)
        self.feature_dropout = TimeSharedDropout(config.gru_dropout)
        feature_dim = feature_channels * feature_hw[0] * feature_hw[1]
        self.gru = nn.GRU(feature_dim, config.gru_units, batch_first=True)
        blocks = []
        previous = config.gru_units
        for _ in range(config.mlp_blocks):
            blocks += [nn.Linear(previous, config.dense_width), nn.ReLU(), nn.Dropout(config.mlp_dropout)]
            previous = config.dense_width
        self.blocks = nn.Sequential(*blocks)
        self.head = nn.Linear(previous, len(config.classes))

    def features(self, x: torch.Tensor) -> torch.Tensor:
        """Per-frame backbone feature maps, shape (B, T, K, Ha, Wa)."""
        return time_distributed_apply(self.backbone, x)

    def logits_from_features(self, features: torch.Tensor) -> torch.Tensor:
        z = features.flatten(2)
        z = z - z.mean(dim=2, keepdim=True)
        z = self.feature_dropout(z)
        out, _ = self.gru(z)
        return self.head(self.blocks(out[:, -1]))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.logits_from_features(self.features(x))


def _init_parameters(net: SequenceClassifier, seed: int) -> None:
    torch.manual_seed(seed)
    for name, param in net.named_parameters():
        if "backbone" in name and param.dim() == 4:
            nn.init.kaiming_normal_(param, nonlinearity="relu")
        elif ("blocks" in name or "head" in name) and param.dim() == 2:
            nn.init.xavier_uniform_(param)
        elif "gru.weight" in name:
            nn.init.xavier_uniform_(param)
        elif "bias" in name:
            nn.init.zeros_(param)


@dataclass(eq=False)
class TrainedModel:
    """A built (possibly trained) classifier plus its reproducibility record."""

    config: ModelConfig
    net: SequenceClassifier
    backbone_output_shape: tuple[int, int, int]  # (Ha, Wa, K)
    training_log: list[dict] = field(default_factory=list)

    @property
    def model_id(self) -> str:
        digest = hashlib.sha256()
        digest.update(json.dumps(config_to_dict(self.config), sort_keys=True).encode())
        for _, tensor in self.net.state_dict().items():
            digest.update(tensor.detach().numpy().astype("<f4").tobytes())
        return digest.hexdigest()[:12]


def build_model(config: ModelConfig) -> TrainedModel:
    """Construct an untrained model with seed-deterministic initialization."""
    if config.backbone not in _BACKBONE_CLASSES:
        raise ConfigError(f"unknown backbone {config.backbone!r}, expected one of {BACKBONES}")
    h, w = config.input_hw
    minimum = _MIN_INPUT[config.backbone]
    if h < minimum or w < minimum:
        raise ConfigError(f"backbone {config.backbone!r} needs input of at least {minimum}x{minimum}")

    stages = len(_BACKBONE_CLASSES[config.backbone].widths)
    fh, fw = h >> stages, w >> stages
    k = _BACKBONE_CLASSES[config.backbone].widths[-1]
    torch.manual_seed(config.seed)
    net = SequenceClassifier(config, (fh, fw), k)
    _init_parameters(net, config.seed)
    net.eval()
    return TrainedModel(config=config, net=net, backbone_output_shape=(fh, fw, k))


def sequence_to_tensor(model: TrainedModel, seq: VideoSequence) -> torch.Tensor:
    """Validate a sequence against the model input contract; return (1, T, C, H, W)."""
    cfg = model.config
    t, h, w, c = seq.frames.shape
    if (h, w) != cfg.input_hw or c != cfg.channels:
        raise ShapeError(
            f"sequence frames are {h}x{w}x{c}, model expects "
            f"{cfg.input_hw[0]}x{cfg.input_hw[1]}x{cfg.channels}"
        )
    dtype = next(model.net.parameters()).dtype
    arr = np.transpose(seq.frames, (0, 3, 1, 2))
    return torch.from_numpy(np.ascontiguousarray(arr)).to(dtype).unsqueeze(0)


def forward(model: TrainedModel, seq: VideoSequence) -> np.ndarray:
    """Per-class probabilities for one sequence, deterministic in eval mode."""
    model.net.eval()
    with torch.no_grad():
        logits = model.net(sequence_to_tensor(model, seq))
        probs = torch.softmax(logits, dim=1)
    return probs[0].numpy().astype(np.float64)


def predict_batch(model: TrainedModel, sequences: list[VideoSequence], batch_size: int = 32) -> np.ndarray:
    """Probabilities for many sequences, shape (N, num_classes)."""
    model.net.eval()
    chunks = []
    with torch.no_grad():
        for start in range(0, len(sequences), batch_size):
            batch = [sequence_to_tensor(model, s) for s in sequences[start : start + batch_size]]
            logits = model.net(torch.cat(batch, dim=0))
            chunks.append(torch.softmax(logits, dim=1).numpy())
    return np.concatenate(chunks, axis=0).astype(np.float64)


def _dataset_tensors(model: TrainedModel, dataset: list[VideoSequence]) -> tuple[torch.Tensor, torch.Tensor]:
    if not dataset:
        raise EmptyInputError("training dataset is empty")
    shapes = {seq.frames.shape for seq in dataset}
    if len(shapes) > 1:
        raise ShapeError(f"all sequences must share one shape, got {sorted(shapes)}")
    class_index = {name: i for i, name in enumerate(model.config.classes)}
    labels = []
    for seq in dataset:
        if seq.label not in class_index:
            raise ValueError(f"label {seq.label!r} not in model classes {model.config.classes}")
        labels.append(class_index[seq.label])
    xs = torch.cat([sequence_to_tensor(model, seq) for seq in dataset], dim=0)
    ys = torch.tensor(labels, dtype=torch.long)
    return xs, ys


OPTIMIZERS = ("adam", "sgd")


def train(
    model: TrainedModel,
    dataset: list[VideoSequence],
    epochs: int = 20,
    lr: float = 1e-3,
    batch_size: int = 8,
    optimizer: str = "adam",
) -> TrainedModel:
    """Train in place on cross-entropy; Adam by default, plain SGD optional.

    Deterministic given the model seed: batch shuffling and dropout masks
    are both derived from it. Raises TrainingError on a non-finite loss.
    """
    xs, ys = _dataset_tensors(model, dataset)
    rng = np.random.default_rng(model.config.seed)
    torch.manual_seed(model.config.seed + 0x5EED)
    if optimizer == "adam":
        opt = torch.optim.Adam(model.net.parameters(), lr=lr)
    elif optimizer == "sgd":
        opt = torch.optim.SGD(model.net.parameters(), lr=lr, momentum=0.0)
    else:
        raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {optimizer!r}")
    loss_fn = nn.CrossEntropyLoss()

    model.net.train()
    n = xs.shape[0]
    for epoch in range(epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        total_correct = 0
        for start in range(0, n, batch_size):
            idx = torch.from_numpy(order[start : start + batch_size].copy())
            logits = model.net(xs[idx])
            loss = loss_fn(logits, ys[idx])
            if not math.isfinite(loss.item()):
                model.net.eval()
                raise TrainingError(f"non-finite training loss at epoch {epoch}", epoch=epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total_loss += loss.item() * len(idx)
            total_correct += int((logits.argmax(dim=1) == ys[idx]).sum())
        model.training_log.append(
            {"epoch": epoch, "loss": total_loss / n, "accuracy": total_correct / n}
        )
    model.net.eval()
    return model


def config_to_dict(config: ModelConfig) -> dict:
    raw = asdict(config)
    raw["classes"] = list(config.classes)
    raw["input_hw"] = list(config.input_hw)
    return raw


def config_from_dict(raw: dict) -> ModelConfig:
    data = dict(raw)
    data["classes"] = tuple(data["classes"])
    data["input_hw"] = tuple(data["input_hw"])
    return ModelConfig(**data)


def save_checkpoint(model: TrainedModel, dir_path: str | Path) -> Path:
    """Write config.json, per-parameter little-endian float32 blobs, and an index."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    (dir_path / "config.json").write_text(json.dumps(config_to_dict(model.config), indent=2) + "\n")
    index = {}
    for name, tensor in model.net.state_dict().items():
        blob = tensor.detach().numpy().astype("<f4")
        file_name = f"{name}.bin"
        (dir_path / file_name).write_bytes(blob.tobytes(order="C"))
        index[name] = {"shape": list(tensor.shape), "file": file_name}
    (dir_path / "index.json").write_text(json.dumps(index, indent=2) + "\n")
    (dir_path / "training_log.json").write_text(json.dumps(model.training_log) + "\n")
    return dir_path


def load_checkpoint(dir_path: str | Path) -> TrainedModel:
    """Rebuild a model from a checkpoint directory."""
    dir_path = Path(dir_path)
    config = config_from_dict(json.loads((dir_path / "config.json").read_text()))
    model = build_model(config)
    index = json.loads((dir_path / "index.json").read_text())
    state = model.net.state_dict()
    if set(index) != set(state):
        raise ConfigError("checkpoint index does not match the architecture parameter set")
    loaded = {}
    for name, entry in index.items():
        raw = np.frombuffer((dir_path / entry["file"]).read_bytes(), dtype="<f4")
        loaded[name] = torch.from_numpy(raw.reshape(entry["shape"]).copy())
    model.net.load_state_dict(loaded)
    log_path = dir_path / "training_log.json"
    if log_path.is_file():
        model.training_log = json.loads(log_path.read_text())
    return model
