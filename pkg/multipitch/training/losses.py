from typing import Optional

import torch
import torch.nn.functional as F

from multipitch.exceptions import ShapeError, ValidationError
from multipitch.models import ModelOutput

POLY_LOSS_WEIGHT = 0.04


def loss_mpe(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean binary cross-entropy over all batch x pitch cells."""
    if pred.shape != target.shape:
        raise ShapeError(f"Prediction {list(pred.shape)} and target {list(target.shape)} differ")
    if not torch.isfinite(pred).all():
        # binary_cross_entropy rejects NaN inputs; the caller reports the non-finite loss
        return pred.new_tensor(float("nan"))
    return F.binary_cross_entropy(pred, target.to(pred.dtype))


def loss_polyphony(logits: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    if logits.dim() != 2 or target.shape != logits.shape[:1]:
        raise ShapeError(
            f"Polyphony logits {list(logits.shape)} do not match target {list(target.shape)}"
        )
    return F.cross_entropy(logits, target.long())


def loss_total(
    output: ModelOutput,
    pitch_target: torch.Tensor,
    poly_target: Optional[torch.Tensor] = None,
    poly_weight: float = POLY_LOSS_WEIGHT,
) -> torch.Tensor:
    """BCE, plus the weighted polyphony cross-entropy when the model has that head."""
    loss = loss_mpe(output.pitch_activity, pitch_target)
    if poly_target is None:
        return loss
    if output.polyphony_logits is None:
        raise ValidationError("A polyphony target was given but the model has no polyphony head")
    return loss + poly_weight * loss_polyphony(output.polyphony_logits, poly_target)
