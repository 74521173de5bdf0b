from typing import List, Optional

import torch
from torch.optim import SGD, Optimizer
from torch.optim.lr_scheduler import ReduceLROnPlateau

from multipitch.exceptions import ValidationError
from multipitch.logger_utils import get_logger

logger = get_logger("training.schedule")


class PlateauSchedule:
    """Learning-rate halving on validation plateaus plus early stopping.

    An epoch improves when its validation loss is below the best so far by
    more than ``tolerance``. After ``patience`` epochs without improvement the
    learning rate is multiplied by ``factor``; after ``early_stop_patience``
    such epochs ``should_stop`` turns true. Without an optimizer the schedule
    drives a private dummy one, which is handy for scripted traces.
    """

    def __init__(
        self,
        optimizer: Optional[Optimizer] = None,
        initial_lr: float = 0.001,
        patience: int = 5,
        factor: float = 0.5,
        early_stop_patience: int = 12,
        tolerance: float = 0.0,
    ):
        if patience < 1 or early_stop_patience < 1:
            raise ValidationError("patience values must be at least 1")
        if not 0.0 < factor < 1.0:
            raise ValidationError(f"lr factor must lie in (0, 1), got {factor}")
        if optimizer is None:
            optimizer = SGD([torch.zeros(1, requires_grad=True)], lr=initial_lr)
        self.optimizer = optimizer
        self.scheduler = ReduceLROnPlateau(
            optimizer,
            mode="min",
            factor=factor,
            # torch reduces once num_bad_epochs exceeds patience
            patience=patience - 1,
            threshold=tolerance,
            threshold_mode="abs",
            cooldown=0,
        )
        self.tolerance = tolerance
        self.early_stop_patience = early_stop_patience
        self.best: Optional[float] = None
        self.best_epoch: Optional[int] = None
        self.bad_epochs = 0
        self.epoch = 0
        self.lrs: List[float] = []

    @property
    def lr(self) -> float:
        return self.optimizer.param_groups[0]["lr"]

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.early_stop_patience

    def step(self, val_loss: float) -> bool:
        """Records one epoch's validation loss; returns whether it improved."""
        self.epoch += 1
        self.lrs.append(self.lr)
        improved = self.best is None or val_loss < self.best - self.tolerance
        if improved:
            self.best = val_loss
            self.best_epoch = self.epoch
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1

        before = self.lr
        self.scheduler.step(val_loss)
        if self.lr != before:
            logger.info(f"Epoch {self.epoch}: learning rate {before:g} -> {self.lr:g}")
        return improved
