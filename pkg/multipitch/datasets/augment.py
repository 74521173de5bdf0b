"""Training-time augmentation of HCQT patches.

Every operator is pure: the same patch, parameters and seed give the same
result. Only transposition touches the labels.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from multipitch.datasets.patches import Patch
from multipitch.exceptions import ValidationError
from multipitch.signal.hcqt import BINS_PER_SEMITONE, N_BINS

MAX_TRANSPOSE = 5
TUNE_SUBSHIFTS = (-1.0, -0.5, 0.5, 1.0)
NOISE_STD = 1e-4
EQ_ALPHA_RANGE = (1, 21)
EQ_BETA_RANGE = (1, N_BINS)
# width of the EQ attenuation curve, one octave
EQ_SIGMA_BINS = 36.0


def shift_axis(x: np.ndarray, n: int) -> np.ndarray:
    """Shifts the last axis by ``n`` positions, zero-filling vacated entries."""
    out = np.zeros_like(x)
    if n > 0:
        out[..., n:] = x[..., :-n]
    elif n < 0:
        out[..., :n] = x[..., -n:]
    else:
        out[...] = x
    return out


def augment_transpose(patch: Patch, shift: int) -> Patch:
    if not float(shift).is_integer() or abs(shift) > MAX_TRANSPOSE:
        raise ValidationError(f"Transposition must be an integer in [-5, 5], got {shift}")
    shift = int(shift)
    return Patch.build(
        shift_axis(patch.input, BINS_PER_SEMITONE * shift),
        shift_axis(patch.pitch_target, shift),
    )


def augment_tune(patch: Patch, subshift: float) -> Patch:
    if subshift not in TUNE_SUBSHIFTS:
        raise ValidationError(f"Tuning subshift must be one of {TUNE_SUBSHIFTS}, got {subshift}")
    x = patch.input
    if subshift == 1.0 or subshift == -1.0:
        shifted = shift_axis(x, int(subshift))
    else:
        # each output bin is the mean of the two input bins it straddles
        shifted = 0.5 * (x + shift_axis(x, 1 if subshift > 0 else -1))
    return patch.model_copy(update={"input": shifted.astype(np.float32)})


def augment_noise(patch: Patch, seed: int, std: float = NOISE_STD) -> Patch:
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, std, size=patch.input.shape)
    return patch.model_copy(update={"input": (patch.input + noise).astype(np.float32)})


def eq_weights(alpha: int, beta: int) -> np.ndarray:
    """Per-bin gains in (0, 1]; 1 at bin ``beta`` (1-based), depth ``alpha/21`` far from it."""
    if not EQ_ALPHA_RANGE[0] <= alpha <= EQ_ALPHA_RANGE[1]:
        raise ValidationError(f"EQ alpha must be in {EQ_ALPHA_RANGE}, got {alpha}")
    if not EQ_BETA_RANGE[0] <= beta <= EQ_BETA_RANGE[1]:
        raise ValidationError(f"EQ beta must be in {EQ_BETA_RANGE}, got {beta}")
    bins = np.arange(N_BINS, dtype=np.float64)
    bump = np.exp(-((bins - (beta - 1)) ** 2) / (2.0 * EQ_SIGMA_BINS**2))
    # depth alpha/21 scales the EQ range onto (0, 1], alpha=21 attenuates distant bins to ~0
    return 1.0 - (alpha / EQ_ALPHA_RANGE[1]) * (1.0 - bump)


def augment_random_eq(
    patch: Patch, alpha: Optional[int] = None, beta: Optional[int] = None, seed: int = 0
) -> Patch:
    """Applies ``eq_weights``; missing parameters are drawn from ``seed``."""
    rng = np.random.default_rng(seed)
    if alpha is None:
        alpha = int(rng.integers(EQ_ALPHA_RANGE[0], EQ_ALPHA_RANGE[1] + 1))
    if beta is None:
        beta = int(rng.integers(EQ_BETA_RANGE[0], EQ_BETA_RANGE[1] + 1))
    weights = eq_weights(alpha, beta)
    return patch.model_copy(update={"input": (patch.input * weights).astype(np.float32)})


class AugmentationPolicy(BaseModel):
    """Which operators run on a training example, and how often.

    Operators compose: each is drawn independently, in the order noise,
    transposition, tuning, EQ.
    """

    noise: bool = True
    transpose: bool = True
    tune: bool = True
    eq: bool = True
    p_noise: float = Field(1.0, ge=0.0, le=1.0)
    p_transpose: float = Field(0.5, ge=0.0, le=1.0)
    p_tune: float = Field(0.5, ge=0.0, le=1.0)
    p_eq: float = Field(0.5, ge=0.0, le=1.0)

    @property
    def enabled(self) -> bool:
        return self.noise or self.transpose or self.tune or self.eq

    def apply(self, patch: Patch, rng: np.random.Generator) -> Patch:
        if self.noise and rng.random() < self.p_noise:
            patch = augment_noise(patch, seed=int(rng.integers(2**32)))
        if self.transpose and rng.random() < self.p_transpose:
            patch = augment_transpose(
                patch, int(rng.integers(-MAX_TRANSPOSE, MAX_TRANSPOSE + 1))
            )
        if self.tune and rng.random() < self.p_tune:
            patch = augment_tune(patch, float(rng.choice(TUNE_SUBSHIFTS)))
        if self.eq and rng.random() < self.p_eq:
            patch = augment_random_eq(
                patch,
                alpha=int(rng.integers(EQ_ALPHA_RANGE[0], EQ_ALPHA_RANGE[1] + 1)),
                beta=int(rng.integers(EQ_BETA_RANGE[0], EQ_BETA_RANGE[1] + 1)),
            )
        return patch


NO_AUGMENTATION = AugmentationPolicy(noise=False, transpose=False, tune=False, eq=False)
