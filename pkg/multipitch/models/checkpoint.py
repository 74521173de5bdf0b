from typing import Any, Dict, Optional, Tuple

import torch

from multipitch.container import read_container, write_container
from multipitch.exceptions import ContainerError
from multipitch.models.config import ModelConfig
from multipitch.models.zoo import MultipitchNet, build_model


def save_checkpoint(path, model: MultipitchNet, meta: Optional[Dict[str, Any]] = None) -> None:
    """Config and every state tensor (weights and batch-norm buffers) as float32."""
    tensors = {
        name: value.detach().cpu().to(torch.float32).numpy()
        for name, value in model.state_dict().items()
    }
    write_container(
        path,
        "checkpoint",
        tensors,
        meta={"config": model.config.model_dump(mode="json", by_alias=True), **(meta or {})},
    )


def load_checkpoint(path, device: str = "cpu") -> Tuple[MultipitchNet, Dict[str, Any]]:
    header, tensors = read_container(path, expected_kind="checkpoint")
    meta = dict(header["meta"])
    try:
        config = ModelConfig.model_validate(meta.pop("config"))
    except KeyError as e:
        raise ContainerError(f"{path}: checkpoint without a model config") from e

    model = build_model(config)
    reference = model.state_dict()
    missing = sorted(set(reference) - set(tensors))
    if missing:
        raise ContainerError(f"{path}: checkpoint lacks tensors {missing[:5]}")
    state = {
        name: torch.from_numpy(tensors[name]).to(reference[name].dtype) for name in reference
    }
    model.load_state_dict(state)
    return model.to(device), meta
