import os
from enum import Enum
from functools import lru_cache
from typing import ClassVar, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from multipitch.backends import CsvDB
from multipitch.exceptions import NotFoundError, ValidationError
from multipitch.interfaces import TableModel

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


class Family(str, Enum):
    CNN = "CNN"
    DCNN = "DCNN"
    DRCNN = "DRCNN"
    UNET = "Unet"
    SAUNET = "SAUnet"
    SAUSNET = "SAUSnet"
    BLUNET = "BLUnet"
    PUNET = "PUnet"


CNN_FAMILIES = frozenset({Family.CNN, Family.DCNN, Family.DRCNN})
UNET_FAMILIES = frozenset(set(Family) - CNN_FAMILIES)
SEQUENCE_FAMILIES = frozenset({Family.SAUNET, Family.SAUSNET, Family.BLUNET})


class ModelConfig(BaseModel):
    """Architecture family and size parameters (N0..N3, gamma, lambda)."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    family: Family
    channels: Tuple[int, int, int, int]
    gamma: Optional[int] = None
    lam: Optional[int] = Field(None, alias="lambda")
    seq_layers: int = 1
    dropout: float = 0.2
    leaky_slope: float = 0.3
    name: Optional[str] = None

    @model_validator(mode="after")
    def check_config(self):
        label = self.name or self.family.value
        if any(c < 1 for c in self.channels):
            raise ValidationError(f"{label}: channel widths must be positive, got {self.channels}")
        if self.family in UNET_FAMILIES:
            if self.gamma is None or self.gamma < 1:
                raise ValidationError(f"{label}: {self.family.value} needs a positive gamma")
        elif self.gamma is not None:
            raise ValidationError(f"{label}: {self.family.value} takes no gamma")
        if self.family in SEQUENCE_FAMILIES:
            if self.lam is None or self.lam < 1:
                raise ValidationError(f"{label}: {self.family.value} needs a positive lambda")
        elif self.lam is not None:
            raise ValidationError(f"{label}: {self.family.value} takes no lambda")
        if self.seq_layers < 1 or (self.seq_layers != 1 and self.family != Family.BLUNET):
            raise ValidationError(f"{label}: seq_layers must be 1 unless the family is BLUnet")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError(f"{label}: dropout must lie in [0, 1), got {self.dropout}")
        if self.leaky_slope < 0:
            raise ValidationError(f"{label}: leaky_slope must be non-negative")
        return self

    @property
    def size(self) -> Optional[str]:
        if self.name and ":" in self.name:
            return self.name.split(":", 1)[1]
        return None


class GridRow(TableModel):
    table_name: ClassVar[str] = "SizeGrid"

    name: str
    family: Family
    size: str
    n0: int
    n1: int
    n2: int
    n3: int
    gamma: Optional[int] = None
    lam: Optional[int] = None
    seq_layers: int = 1
    initial_lr: float
    published_k: int

    @classmethod
    def get_field_map(cls) -> Dict[str, str]:
        return {"lam": "lambda"}

    def to_config(self) -> ModelConfig:
        return ModelConfig(
            family=self.family,
            channels=(self.n0, self.n1, self.n2, self.n3),
            gamma=self.gamma,
            lam=self.lam,
            seq_layers=self.seq_layers,
            name=self.name,
        )


class CountRow(TableModel):
    table_name: ClassVar[str] = "ParamCounts"

    name: str
    params: int
    # why a realized count sits outside 25% of the published one
    deviation: str = ""


@lru_cache(maxsize=None)
def _grid() -> Tuple[GridRow, ...]:
    return tuple(CsvDB(os.path.join(DATA_DIR, "size_grid.csv"), strict=True).get_all(GridRow))


def size_grid() -> Dict[str, ModelConfig]:
    """All published configurations keyed by ``Family:Size``."""
    return {row.name: row.to_config() for row in _grid()}


def grid_row(name: str) -> GridRow:
    for row in _grid():
        if row.name == name:
            return row
    raise NotFoundError(f"No model '{name}' in the size grid")


def config_for(name: str) -> ModelConfig:
    return grid_row(name).to_config()


def default_lr(config: ModelConfig) -> float:
    """Published initial learning rate; 0.001 for anything off the grid."""
    for row in _grid():
        if row.to_config().model_dump(exclude={"name"}) == config.model_dump(exclude={"name"}):
            return row.initial_lr
    return 0.001


def golden_counts() -> Dict[str, int]:
    rows: List[CountRow] = CsvDB(os.path.join(DATA_DIR, "param_counts.csv"), strict=True).get_all(
        CountRow
    )
    return {row.name: row.params for row in rows}


def count_deviations() -> Dict[str, str]:
    rows = CsvDB(os.path.join(DATA_DIR, "param_counts.csv"), strict=True).get_all(CountRow)
    return {row.name: row.deviation for row in rows if row.deviation}
