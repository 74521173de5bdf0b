from typing import NamedTuple, Optional

import torch
from torch import nn

from multipitch.datasets.patches import INPUT_SHAPE, N_POLYPHONY_CLASSES
from multipitch.datasets.pianoroll import N_PITCHES
from multipitch.exceptions import ShapeError, ValidationError
from multipitch.logger_utils import get_logger
from multipitch.models.blocks import (
    Backend,
    InputNorm,
    PolyphonyHead,
    Prefilter,
    RecurrentStack,
    SelfAttentionStack,
)
from multipitch.models.config import Family, ModelConfig
from multipitch.models.unet import UNet

logger = get_logger("models")

PREFILTER_DEPTH = 5


class ModelOutput(NamedTuple):
    pitch_activity: torch.Tensor
    polyphony_logits: Optional[torch.Tensor] = None


class MultipitchNet(nn.Module):
    """Input normalization, a family-specific front-end and the shared CNN back-end."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        n0, n1, n2, n3 = config.channels
        slope, dropout = config.leaky_slope, config.dropout

        self.norm = InputNorm()
        self.frontend = self._build_frontend(config)
        self.backend = Backend(n0, n1, n2, n3, slope, dropout)
        self.poly_head = None
        if config.family == Family.PUNET:
            self.poly_head = PolyphonyHead(self.frontend.bottleneck_channels, slope, dropout)

    @staticmethod
    def _build_frontend(config: ModelConfig) -> nn.Module:
        n0 = config.channels[0]
        family = config.family
        if family == Family.CNN:
            return Prefilter(n0, 1, False, config.leaky_slope, config.dropout)
        if family in (Family.DCNN, Family.DRCNN):
            return Prefilter(
                n0, PREFILTER_DEPTH, family == Family.DRCNN, config.leaky_slope, config.dropout
            )

        channels = 8 * config.gamma
        bottleneck = skip = None
        if family in (Family.SAUNET, Family.SAUSNET):
            bottleneck = SelfAttentionStack(channels, config.lam, config.dropout)
        if family == Family.SAUSNET:
            skip = SelfAttentionStack(channels, config.lam, config.dropout)
        if family == Family.BLUNET:
            bottleneck = RecurrentStack(channels, config.lam, config.seq_layers, config.dropout)
        return UNet(config.gamma, n0, bottleneck=bottleneck, skip=skip)

    @property
    def has_polyphony_head(self) -> bool:
        return self.poly_head is not None

    def forward(self, x: torch.Tensor) -> ModelOutput:
        x = self.norm(x)
        if isinstance(self.frontend, UNet):
            features, bottleneck = self.frontend(x)
        else:
            features, bottleneck = self.frontend(x), None
        pitch = self.backend(features)
        poly = self.poly_head(bottleneck) if self.poly_head is not None else None
        return ModelOutput(pitch, poly)


def build_model(config: ModelConfig, seed: Optional[int] = None) -> MultipitchNet:
    """Builds the network for ``config``; ``seed`` fixes the weight initialization."""
    if seed is not None:
        torch.manual_seed(seed)
    model = MultipitchNet(config)
    logger.info(f"Built {config.name or config.family.value}: {count_params(model)} parameters")
    return model


def forward(model: MultipitchNet, batch: torch.Tensor) -> ModelOutput:
    """``model(batch)`` with the input contract checked first."""
    if batch.dim() != 4 or tuple(batch.shape[1:]) != INPUT_SHAPE:
        raise ShapeError(f"Expected input [B, {', '.join(map(str, INPUT_SHAPE))}], got {list(batch.shape)}")
    if batch.shape[0] == 0:
        raise ShapeError("Empty batch")
    if not torch.isfinite(batch).all():
        raise ValidationError("Input batch contains non-finite values")

    output = model(batch)
    if output.pitch_activity.shape != (batch.shape[0], N_PITCHES):
        raise ShapeError(f"Model produced {list(output.pitch_activity.shape)}, expected [{batch.shape[0]}, {N_PITCHES}]")
    if output.polyphony_logits is not None and output.polyphony_logits.shape[1] != N_POLYPHONY_CLASSES:
        raise ShapeError(f"Polyphony head produced {output.polyphony_logits.shape[1]} classes")
    return output


def count_params(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)
