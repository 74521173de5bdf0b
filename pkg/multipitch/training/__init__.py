from .history import EpochRecord, TimingRecord, TrainHistory, read_history, write_history
from .losses import POLY_LOSS_WEIGHT, loss_mpe, loss_polyphony, loss_total
from .schedule import PlateauSchedule
from .trainer import (
    TrainConfig,
    batch_loss,
    seed_everything,
    train,
    train_steps,
    validation_loss,
)

__all__ = [
    "EpochRecord",
    "POLY_LOSS_WEIGHT",
    "PlateauSchedule",
    "TimingRecord",
    "TrainConfig",
    "TrainHistory",
    "batch_loss",
    "loss_mpe",
    "loss_polyphony",
    "loss_total",
    "read_history",
    "seed_everything",
    "train",
    "train_steps",
    "validation_loss",
    "write_history",
]
