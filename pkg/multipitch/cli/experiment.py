"""Experiment configuration and the per-seed run directory."""

import hashlib
import json
import os
import platform
from typing import Any, Dict, List, Optional

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field, field_validator

from multipitch import settings
from multipitch.datasets import AugmentationPolicy
from multipitch.exceptions import NotFoundError, ValidationError
from multipitch.models import ModelConfig, config_for
from multipitch.splits import SPLIT_NAMES, SplitOptions
from multipitch.training import TrainConfig

CONFIG_FILE = "config.json"
ENVIRONMENT_FILE = "environment.json"
HISTORY_FILE = "history.csv"
TIMING_FILE = "timing.csv"
EVAL_FILE = "eval.csv"
SPLIT_FILE = "split.csv"
LOG_FILE = "train.log"
BEST_CHECKPOINT = "best.ckpt"
FINAL_CHECKPOINT = "final.ckpt"


class DataConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    manifest: str = "manifest.csv"
    # None: MULTIPITCH_CACHE_ROOT
    features: Optional[str] = None
    split: str = "MuN-10a"
    # materialized split table; when absent the split is computed from the manifest
    split_file: Optional[str] = None
    train_examples: int = Field(95_000, ge=1)
    val_examples: int = Field(9_000, ge=1)

    @field_validator("split")
    @classmethod
    def check_split(cls, value: str) -> str:
        if value not in SPLIT_NAMES:
            raise NotFoundError(f"Unknown split '{value}', expected one of {list(SPLIT_NAMES)}")
        return value

    @property
    def feature_dir(self) -> str:
        return self.features or settings.cache_root()


class ExperimentConfig(BaseModel):
    """Everything needed to repeat a set of training runs.

    ``model`` takes either a full ``ModelConfig`` or a size-grid name such
    as ``"SAUnet:L"``.
    """

    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    model: ModelConfig
    train: TrainConfig = Field(default_factory=TrainConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    splits: SplitOptions = Field(default_factory=SplitOptions)
    augmentation: AugmentationPolicy = Field(default_factory=AugmentationPolicy)
    seeds: List[int] = Field(default_factory=lambda: [0])
    output_dir: str = "runs"
    threshold: float = Field(0.4, gt=0, lt=1)

    @field_validator("model", mode="before")
    @classmethod
    def resolve_model(cls, value: Any):
        if isinstance(value, str):
            return config_for(value)
        return value

    @field_validator("seeds")
    @classmethod
    def check_seeds(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValidationError("At least one seed is required")
        if len(set(value)) != len(value):
            raise ValidationError(f"Seeds must be distinct, got {value}")
        return value

    @property
    def model_label(self) -> str:
        return self.model.name or self.model.family.value

    def for_seed(self, seed: int) -> "ExperimentConfig":
        train = self.train.model_copy(update={"seed": seed})
        return self.model_copy(update={"train": train, "seeds": [seed]})

    def run_dir(self, seed: int) -> str:
        label = self.model_label.replace(":", "-")
        return os.path.join(self.output_dir, f"{self.name}-{label}-seed{seed}")


def canonical_json(config: ExperimentConfig) -> str:
    return json.dumps(config.model_dump(mode="json", by_alias=True), sort_keys=True)


def config_md5(config: ExperimentConfig) -> str:
    return hashlib.md5(canonical_json(config).encode("utf-8")).hexdigest()


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_overrides(data: Dict[str, Any], overrides: List[str]) -> Dict[str, Any]:
    """Applies ``section.key=value`` overrides; values are read as JSON when possible."""
    data = json.loads(json.dumps(data))
    for override in overrides:
        key, sep, raw = override.partition("=")
        if not sep or not key:
            raise ValidationError(f"Override '{override}' is not of the form section.key=value")
        *sections, leaf = key.split(".")
        node = data
        for section in sections:
            child = node.setdefault(section, {})
            if not isinstance(child, dict):
                raise ValidationError(f"Override '{override}': '{section}' is not a section")
            node = child
        node[leaf] = _parse_value(raw)
    return data


def load_experiment(path: Optional[str], overrides: Optional[List[str]] = None) -> ExperimentConfig:
    data: Dict[str, Any] = {}
    if path:
        if not os.path.exists(path):
            raise NotFoundError(f"No experiment config at {path}")
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        # snapshots wrap the config next to its checksum
        if set(data) == {"config", "md5"}:
            data = data["config"]
    data = apply_overrides(data, overrides or [])
    if "model" not in data:
        raise ValidationError("The experiment config needs a 'model' entry")
    return ExperimentConfig.model_validate(data)


def write_snapshot(run_dir: str, config: ExperimentConfig) -> str:
    os.makedirs(run_dir, exist_ok=True)
    md5 = config_md5(config)
    with open(os.path.join(run_dir, CONFIG_FILE), "w", encoding="utf-8") as f:
        json.dump(
            {"config": config.model_dump(mode="json", by_alias=True), "md5": md5},
            f,
            indent=2,
            sort_keys=True,
        )
    return md5


def read_snapshot(run_dir: str) -> ExperimentConfig:
    path = os.path.join(run_dir, CONFIG_FILE)
    if not os.path.exists(path):
        raise NotFoundError(f"{run_dir} is not a run directory (no {CONFIG_FILE})")
    return load_experiment(path)


def environment_fingerprint(config: ExperimentConfig) -> Dict[str, Any]:
    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "torch": torch.__version__,
        "numpy": np.__version__,
        "device": config.train.device,
        "deterministic": config.train.deterministic,
    }


def write_environment(run_dir: str, config: ExperimentConfig) -> None:
    with open(os.path.join(run_dir, ENVIRONMENT_FILE), "w", encoding="utf-8") as f:
        json.dump(environment_fingerprint(config), f, indent=2, sort_keys=True)
