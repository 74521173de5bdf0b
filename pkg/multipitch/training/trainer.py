import copy
import os
import random
import time
from typing import Iterable, Optional, Tuple

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field, model_validator

from multipitch import settings
from multipitch.datasets import Batch
from multipitch.exceptions import NonFiniteLossError, ValidationError
from multipitch.logger_utils import get_logger
from multipitch.models import MultipitchNet, default_lr, save_checkpoint
from multipitch.training.history import EpochRecord, TimingRecord, TrainHistory
from multipitch.training.losses import POLY_LOSS_WEIGHT, loss_total
from multipitch.training.schedule import PlateauSchedule

logger = get_logger("training.trainer")


class TrainConfig(BaseModel):
    """Optimization protocol; defaults are the published values."""

    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(25, ge=1)
    max_epochs: int = Field(100, ge=1)
    # None: the size grid's rate for the model (0.0002 for DCNN/DRCNN M and L)
    initial_lr: Optional[float] = Field(None, gt=0)
    plateau_patience: int = Field(5, ge=1)
    lr_factor: float = 0.5
    early_stop_patience: int = Field(12, ge=1)
    batches_per_epoch: int = Field(3800, ge=1)
    poly_loss_weight: float = Field(POLY_LOSS_WEIGHT, ge=0)
    poly_in_validation: bool = True
    tolerance: float = Field(0.0, ge=0)
    weight_decay: float = Field(0.01, ge=0)
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = Field(1e-8, gt=0)
    seed: int = 0
    deterministic: bool = False
    device: str = Field(default_factory=lambda: settings.DEVICE)

    @model_validator(mode="after")
    def check_factor(self):
        if not 0.0 < self.lr_factor < 1.0:
            raise ValidationError(f"lr_factor must lie in (0, 1), got {self.lr_factor}")
        return self


def seed_everything(seed: int, deterministic: bool = False) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
    if deterministic:
        os.environ.setdefault("CUBLAS_WORKSPACE_CONFIG", ":4096:8")
        torch.use_deterministic_algorithms(True)
        torch.backends.cudnn.benchmark = False
    else:
        torch.use_deterministic_algorithms(False)


def _to_device(batch: Batch, device: str) -> Batch:
    return Batch(*(t.to(device) for t in batch))


def batch_loss(
    model: MultipitchNet, batch: Batch, poly_weight: float, with_poly: bool = True
) -> torch.Tensor:
    output = model(batch.inputs)
    poly_target = batch.polyphony if with_poly and model.has_polyphony_head else None
    return loss_total(output, batch.pitch, poly_target, poly_weight)


def _make_optimizer(model: MultipitchNet, lr: float, config: TrainConfig) -> torch.optim.AdamW:
    return torch.optim.AdamW(
        model.parameters(),
        lr=lr,
        betas=config.betas,
        eps=config.eps,
        weight_decay=config.weight_decay,
    )


def _initial_lr(model: MultipitchNet, config: TrainConfig) -> float:
    if config.initial_lr is not None:
        return config.initial_lr
    return default_lr(model.config)


@torch.no_grad()
def validation_loss(model: MultipitchNet, val_stream: Iterable[Batch], config: TrainConfig) -> float:
    """Mean batch loss over one pass of ``val_stream`` in eval mode."""
    model.eval()
    total, count = 0.0, 0
    for batch in val_stream:
        batch = _to_device(batch, config.device)
        loss = batch_loss(model, batch, config.poly_loss_weight, config.poly_in_validation)
        total += loss.item()
        count += 1
    if count == 0:
        raise ValidationError("Validation stream yielded no batches")
    return total / count


def train(
    model: MultipitchNet,
    train_stream: Iterable[Batch],
    val_stream: Iterable[Batch],
    config: TrainConfig,
    checkpoint_dir: Optional[str] = None,
) -> Tuple[MultipitchNet, TrainHistory]:
    """Trains until ``max_epochs`` or early stopping; returns the best-epoch weights.

    With ``checkpoint_dir`` set, ``best.ckpt`` is refreshed on every improving
    epoch and ``final.ckpt`` holds the weights of the last epoch.
    """
    seed_everything(config.seed, config.deterministic)
    model.to(config.device)
    lr = _initial_lr(model, config)
    optimizer = _make_optimizer(model, lr, config)
    schedule = PlateauSchedule(
        optimizer,
        initial_lr=lr,
        patience=config.plateau_patience,
        factor=config.lr_factor,
        early_stop_patience=config.early_stop_patience,
        tolerance=config.tolerance,
    )
    history = TrainHistory()
    best_state = copy.deepcopy(model.state_dict())
    batches = iter(train_stream)
    logger.info(
        f"Training {model.config.name or model.config.family.value} for at most "
        f"{config.max_epochs} epochs of {config.batches_per_epoch} batches, lr={lr:g}, seed={config.seed}"
    )

    for epoch in range(1, config.max_epochs + 1):
        model.train()
        started = time.perf_counter()
        epoch_lr = schedule.lr
        running = 0.0
        for index in range(1, config.batches_per_epoch + 1):
            batch = _to_device(next(batches), config.device)
            loss = batch_loss(model, batch, config.poly_loss_weight)
            if not torch.isfinite(loss):
                raise NonFiniteLossError(epoch, index, epoch_lr)
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            running += loss.item()

        train_loss = running / config.batches_per_epoch
        val_loss = validation_loss(model, val_stream, config)
        if not np.isfinite(val_loss):
            raise NonFiniteLossError(epoch, 0, epoch_lr)

        improved = schedule.step(val_loss)
        history.epochs.append(
            EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss, lr=epoch_lr)
        )
        history.timings.append(TimingRecord(epoch=epoch, seconds=time.perf_counter() - started))
        logger.info(
            f"Epoch {epoch}: train {train_loss:.5f}, val {val_loss:.5f}"
            + (" (best)" if improved else f" ({schedule.bad_epochs} without improvement)")
        )

        if improved:
            best_state = copy.deepcopy(model.state_dict())
            history.best_epoch = epoch
            if checkpoint_dir:
                save_checkpoint(os.path.join(checkpoint_dir, "best.ckpt"), model, {"epoch": epoch})
        if schedule.should_stop:
            history.stopped_early = True
            logger.info(f"Early stop after epoch {epoch}; best epoch {history.best_epoch}")
            break

    if checkpoint_dir:
        save_checkpoint(os.path.join(checkpoint_dir, "final.ckpt"), model, {"epoch": len(history.epochs)})
    model.load_state_dict(best_state)
    model.eval()
    return model, history


def train_steps(
    model: MultipitchNet, batches: Iterable[Batch], steps: int, config: TrainConfig
) -> MultipitchNet:
    """Plain AdamW steps at a constant rate, no validation or scheduling."""
    seed_everything(config.seed, config.deterministic)
    model.to(config.device)
    lr = _initial_lr(model, config)
    optimizer = _make_optimizer(model, lr, config)
    model.train()
    iterator = iter(batches)
    for step in range(1, steps + 1):
        batch = _to_device(next(iterator), config.device)
        loss = batch_loss(model, batch, config.poly_loss_weight)
        if not torch.isfinite(loss):
            raise NonFiniteLossError(0, step, lr)
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()
    model.eval()
    return model
