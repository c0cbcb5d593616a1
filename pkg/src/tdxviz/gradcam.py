"""Class-activation maps at the output of the time-distributed backbone.

This architecture only exposes frame-aligned feature maps at the backbone's
final layer, so activation maps are computed there: for every frame the
channel weights are the spatial means of the gradients, the weighted sum of
activations is rectified, upsampled, and normalized per frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .data import VideoSequence
from .errors import UnsupportedArchitectureError
from .heatmap import HeatmapStack, normalize_maps
from .imageops import bilinear_resize
from .model import TrainedModel, sequence_to_tensor


@dataclass(eq=False)
class ActivationBundle:
    """Frame-aligned backbone activations and their score gradients.

    Both arrays have shape (T, Ha, Wa, K).
    """

    activations: np.ndarray
    gradients: np.ndarray
    class_index: int
    model_id: str

    def __post_init__(self):
        self.activations = np.asarray(self.activations, dtype=np.float32)
        self.gradients = np.asarray(self.gradients, dtype=np.float32)
        if self.activations.ndim != 4:
            raise ValueError(f"activations must be (T, Ha, Wa, K), got {self.activations.shape}")
        if self.activations.shape != self.gradients.shape:
            raise ValueError(
                f"activations {self.activations.shape} and gradients "
                f"{self.gradients.shape} must have identical shapes"
            )


def class_score_from_features(model: TrainedModel, features: np.ndarray, class_index: int) -> float:
    """Class probability computed from captured (T, Ha, Wa, K) feature maps.

    This is the perturbation hook for the capture point: modifying the
    features and re-running the remainder of the network through this
    function is equivalent to a full forward pass with the modified
    intermediate tensor.
    """
    model.net.eval()
    dtype = next(model.net.parameters()).dtype
    arr = np.transpose(np.asarray(features), (0, 3, 1, 2))  # (T, K, Ha, Wa)
    tensor = torch.from_numpy(np.ascontiguousarray(arr)).to(dtype).unsqueeze(0)
    with torch.no_grad():
        probs = torch.softmax(model.net.logits_from_features(tensor), dim=1)
    return float(probs[0, class_index])


def capture_bundle(model: TrainedModel, seq: VideoSequence, class_index: int) -> ActivationBundle:
    """Run forward and backward once, recording the backbone feature maps.

    The gradient of the chosen class probability is taken with respect to
    the captured tensor itself, so both arrays align frame by frame.
    """
    if not 0 <= class_index < len(model.config.classes):
        raise ValueError(
            f"class_index {class_index} out of range for {len(model.config.classes)} classes"
        )
    ha, wa, _ = model.backbone_output_shape
    if ha * wa <= 1:
        raise UnsupportedArchitectureError(
            "backbone output has no spatial extent; activation maps are undefined"
        )
    model.net.eval()
    x = sequence_to_tensor(model, seq)
    features = model.net.features(x)  # (1, T, K, Ha, Wa)
    features.retain_grad()
    probs = torch.softmax(model.net.logits_from_features(features), dim=1)
    probs[0, class_index].backward()
    if features.grad is None:
        raise RuntimeError("feature gradient was not populated")
    acts = features[0].detach().numpy()
    grads = features.grad[0].detach().numpy()
    # (T, K, Ha, Wa) -> (T, Ha, Wa, K)
    return ActivationBundle(
        activations=np.transpose(acts, (0, 2, 3, 1)),
        gradients=np.transpose(grads, (0, 2, 3, 1)),
        class_index=class_index,
        model_id=model.model_id,
    )


def gradcam_raw(bundle: ActivationBundle) -> np.ndarray:
    """Rectified weighted activation sums at feature-map resolution (T, Ha, Wa)."""
    weights = bundle.gradients.mean(axis=(1, 2))  # (T, K)
    weighted = np.einsum("thwk,tk->thw", bundle.activations, weights)
    return np.maximum(weighted, 0.0).astype(np.float32)


def gradcam(bundle: ActivationBundle, target_hw: tuple[int, int]) -> HeatmapStack:
    """Upsampled, per-frame-normalized activation maps for one bundle."""
    t, ha, wa, _ = bundle.activations.shape
    th, tw = int(target_hw[0]), int(target_hw[1])
    if th < ha or tw < wa:
        raise ValueError(f"target {(th, tw)} is smaller than the feature map {(ha, wa)}")
    raw = gradcam_raw(bundle)
    upsampled = np.stack([bilinear_resize(raw[i], (th, tw)) for i in range(t)], axis=0)
    return HeatmapStack(
        maps=normalize_maps(upsampled, "per-frame"),
        method="gradcam",
        class_index=bundle.class_index,
        model_id=bundle.model_id,
        normalization="per-frame",
    )
