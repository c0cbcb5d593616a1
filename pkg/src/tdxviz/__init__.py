"""tdxviz: per-frame explanations for time-distributed CNN+GRU video models.

The toolkit builds sequence classifiers that apply a convolutional backbone
to every frame independently before temporal aggregation, and explains
their decisions with per-frame saliency maps, activation maps at the
backbone output, and level-set contour overlays. A sweep harness trains
one model per hyperparameter value and reports table-style metrics.
"""

__version__ = "0.1.0"

from .contours import (
    Contour,
    ContourSet,
    contour_set_from_json,
    contour_set_to_json,
    extract_contours,
    polygon_area,
    write_contour_set,
)
from .data import (
    DatasetSpec,
    VideoSequence,
    generate_synthetic,
    load_dataset,
    load_sequence,
    preprocess,
    save_dataset,
    save_sequence,
    shape_mask,
)
from .errors import (
    ConfigError,
    EmptyInputError,
    FormatError,
    ShapeError,
    TdxvizError,
    TrainingError,
    UnsupportedArchitectureError,
)
from .gradcam import (
    ActivationBundle,
    capture_bundle,
    class_score_from_features,
    gradcam,
    gradcam_raw,
)
from .heatmap import HeatmapStack, normalize_maps, read_stack, write_stack
from .metrics import MetricsRow, compute_metrics, f1_harmonic, rows_to_csv
from .model import (
    ModelConfig,
    TrainedModel,
    build_model,
    forward,
    load_checkpoint,
    predict_batch,
    save_checkpoint,
    time_distributed_apply,
    train,
)
from .overlay import render_overlay
from .saliency import saliency, saliency_raw
from .sweep import DEFAULT_GRIDS, SweepResult, SweepSpec, run_sweep, split_dataset

__all__ = [
    "ActivationBundle",
    "ConfigError",
    "Contour",
    "ContourSet",
    "DatasetSpec",
    "DEFAULT_GRIDS",
    "EmptyInputError",
    "FormatError",
    "HeatmapStack",
    "MetricsRow",
    "ModelConfig",
    "ShapeError",
    "SweepResult",
    "SweepSpec",
    "TdxvizError",
    "TrainedModel",
    "TrainingError",
    "UnsupportedArchitectureError",
    "VideoSequence",
    "build_model",
    "capture_bundle",
    "class_score_from_features",
    "compute_metrics",
    "contour_set_from_json",
    "contour_set_to_json",
    "extract_contours",
    "f1_harmonic",
    "forward",
    "generate_synthetic",
    "gradcam",
    "gradcam_raw",
    "load_checkpoint",
    "load_dataset",
    "load_sequence",
    "normalize_maps",
    "polygon_area",
    "predict_batch",
    "preprocess",
    "read_stack",
    "render_overlay",
    "rows_to_csv",
    "run_sweep",
    "saliency",
    "saliency_raw",
    "save_checkpoint",
    "save_dataset",
    "save_sequence",
    "shape_mask",
    "split_dataset",
    "time_distributed_apply",
    "train",
    "write_contour_set",
    "write_stack",
]
