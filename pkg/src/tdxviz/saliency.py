"""Per-frame saliency maps for sequence models.

The class score is differentiated with respect to every input pixel of the
whole sequence in one backward pass, then reduced per frame by the maximum
absolute gradient over channels.
"""

from __future__ import annotations

import numpy as np
import torch

from .data import VideoSequence
from .heatmap import HeatmapStack, normalize_maps
from .model import TrainedModel, sequence_to_tensor


def saliency_raw(model: TrainedModel, seq: VideoSequence, class_index: int) -> np.ndarray:
    """Unnormalized per-frame saliency, shape (T, H, W).

    Entry [t, i, j] is the channel-maximum of the absolute gradient of the
    chosen class probability with respect to input pixel (t, i, j).
    """
    if not 0 <= class_index < len(model.config.classes):
        raise ValueError(
            f"class_index {class_index} out of range for {len(model.config.classes)} classes"
        )
    model.net.eval()
    x = sequence_to_tensor(model, seq).requires_grad_(True)
    probs = torch.softmax(model.net(x), dim=1)
    score = probs[0, class_index]
    score.backward()
    if x.grad is None:
        raise RuntimeError("input gradient was not populated")
    grad = x.grad[0]  # (T, C, H, W)
    return grad.abs().amax(dim=1).detach().numpy().astype(np.float32)


def saliency(
    model: TrainedModel,
    seq: VideoSequence,
    class_index: int,
    normalization: str = "per-frame",
) -> HeatmapStack:
    """Normalized saliency stack for one sequence and class."""
    raw = saliency_raw(model, seq, class_index)
    return HeatmapStack(
        maps=normalize_maps(raw, normalization),
        method="saliency",
        class_index=class_index,
        model_id=model.model_id,
        normalization=normalization,
    )
