from .checkpoint import load_checkpoint, save_checkpoint
from .config import (
    CNN_FAMILIES,
    SEQUENCE_FAMILIES,
    UNET_FAMILIES,
    Family,
    GridRow,
    ModelConfig,
    config_for,
    count_deviations,
    default_lr,
    golden_counts,
    grid_row,
    size_grid,
)
from .zoo import ModelOutput, MultipitchNet, build_model, count_params, forward

__all__ = [
    "CNN_FAMILIES",
    "SEQUENCE_FAMILIES",
    "UNET_FAMILIES",
    "Family",
    "GridRow",
    "ModelConfig",
    "ModelOutput",
    "MultipitchNet",
    "build_model",
    "config_for",
    "count_deviations",
    "count_params",
    "default_lr",
    "forward",
    "golden_counts",
    "grid_row",
    "load_checkpoint",
    "save_checkpoint",
    "size_grid",
]
