"""Low-light image enhancement with light-distribution suppression."""

from .config import Config, LossWeights, NetworkConfig, TrainConfig, apply_overrides, load_config, save_config
from .estimator import LDEnhancer, LightDistributionLabeler
from .iia import AdjustmentTrace, interweave_adjust
from .light_label import LightLabelPair, light_label, load_label_pair, save_label_pair
from .losses import (
    LossReport,
    color_constancy_loss,
    exposure_control_loss,
    light_distribution_loss,
    smoothness_loss,
    spatial_consistency_loss,
    total_loss,
    weighted_total,
)
from .network import EnhancerNet, ForwardMaps, sinusoidal_position_grid
from .tracking import (
    Box,
    MetricReport,
    TrackRecord,
    cle,
    improvement_delta,
    iou,
    load_track_records,
    ope_metrics,
)
from .training import TrainingDiverged, TrainResult, train
from .weights_io import load_arrays, save_arrays

__version__ = "0.1.0"

__all__ = [
    "AdjustmentTrace",
    "Box",
    "Config",
    "EnhancerNet",
    "ForwardMaps",
    "LDEnhancer",
    "LightDistributionLabeler",
    "LightLabelPair",
    "LossReport",
    "LossWeights",
    "MetricReport",
    "NetworkConfig",
    "TrackRecord",
    "TrainConfig",
    "TrainResult",
    "TrainingDiverged",
    "apply_overrides",
    "cle",
    "color_constancy_loss",
    "exposure_control_loss",
    "improvement_delta",
    "interweave_adjust",
    "iou",
    "light_distribution_loss",
    "light_label",
    "load_arrays",
    "load_config",
    "load_label_pair",
    "load_track_records",
    "ope_metrics",
    "save_arrays",
    "save_config",
    "save_label_pair",
    "sinusoidal_position_grid",
    "smoothness_loss",
    "spatial_consistency_loss",
    "total_loss",
    "train",
    "weighted_total",
]
