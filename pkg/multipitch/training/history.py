import os
from typing import ClassVar, List, Optional

from pydantic import BaseModel, Field

from multipitch.backends import CsvDB
from multipitch.exceptions import NotFoundError
from multipitch.interfaces import TableModel


class EpochRecord(TableModel):
    table_name: ClassVar[str] = "History"

    epoch: int
    train_loss: float
    val_loss: float
    lr: float


class TimingRecord(TableModel):
    table_name: ClassVar[str] = "Timing"

    epoch: int
    seconds: float


class TrainHistory(BaseModel):
    epochs: List[EpochRecord] = Field(default_factory=list)
    timings: List[TimingRecord] = Field(default_factory=list)
    best_epoch: Optional[int] = None
    stopped_early: bool = False

    @property
    def val_losses(self) -> List[float]:
        return [e.val_loss for e in self.epochs]

    @property
    def lrs(self) -> List[float]:
        return [e.lr for e in self.epochs]

    @property
    def best_val_loss(self) -> Optional[float]:
        if self.best_epoch is None:
            return None
        return self.epochs[self.best_epoch - 1].val_loss


def write_history(run_dir: str, history: TrainHistory) -> None:
    CsvDB(os.path.join(run_dir, "history.csv")).replace_all(history.epochs)
    CsvDB(os.path.join(run_dir, "timing.csv")).replace_all(history.timings)


def read_history(run_dir: str) -> TrainHistory:
    db = CsvDB(os.path.join(run_dir, "history.csv"), strict=True)
    if not db.exists():
        raise NotFoundError(f"No history.csv in {run_dir}")
    epochs = db.get_all(EpochRecord)
    timings = CsvDB(os.path.join(run_dir, "timing.csv"), strict=True).get_all(TimingRecord)
    best = min(epochs, key=lambda e: e.val_loss).epoch if epochs else None
    return TrainHistory(epochs=epochs, timings=timings, best_epoch=best)
