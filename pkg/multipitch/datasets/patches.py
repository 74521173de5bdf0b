from typing import List, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from torch.utils.data import ConcatDataset, Dataset

from multipitch.datasets.pianoroll import N_PITCHES, PianoRoll
from multipitch.exceptions import ShapeError, ValidationError
from multipitch.logger_utils import get_logger
from multipitch.signal import HARMONICS, N_BINS, HcqtTensor

logger = get_logger("datasets.patches")

CONTEXT = 37
PATCH_FRAMES = 2 * CONTEXT + 1
MAX_POLYPHONY = 23
N_POLYPHONY_CLASSES = MAX_POLYPHONY + 1
INPUT_SHAPE = (len(HARMONICS), PATCH_FRAMES, N_BINS)


def polyphony_of(pitch_target: np.ndarray) -> int:
    return int(min(int(np.count_nonzero(pitch_target)), MAX_POLYPHONY))


class Patch(BaseModel):
    """One training example: 75 HCQT frames and the centre frame's labels."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    input: np.ndarray
    pitch_target: np.ndarray
    polyphony_target: int

    @model_validator(mode="after")
    def check_patch(self):
        if self.input.shape != INPUT_SHAPE:
            raise ShapeError(f"Patch input must be {INPUT_SHAPE}, got {self.input.shape}")
        if self.pitch_target.shape != (N_PITCHES,):
            raise ShapeError(f"Patch target must be ({N_PITCHES},), got {self.pitch_target.shape}")
        if self.polyphony_target != polyphony_of(self.pitch_target):
            raise ValidationError(
                f"polyphony_target {self.polyphony_target} does not match the pitch target"
            )
        return self

    @classmethod
    def build(cls, input: np.ndarray, pitch_target: np.ndarray) -> "Patch":
        pitch_target = np.asarray(pitch_target, dtype=np.uint8)
        return cls(
            input=np.asarray(input, dtype=np.float32),
            pitch_target=pitch_target,
            polyphony_target=polyphony_of(pitch_target),
        )


class TrackFeatures(BaseModel):
    """HCQT and piano roll of one track, frame-aligned."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    track_id: str
    hcqt: HcqtTensor
    roll: PianoRoll

    @model_validator(mode="after")
    def check_alignment(self):
        if self.hcqt.n_frames != self.roll.n_frames:
            raise ShapeError(
                f"Track {self.track_id}: {self.hcqt.n_frames} HCQT frames but "
                f"{self.roll.n_frames} piano-roll frames"
            )
        return self

    @property
    def n_frames(self) -> int:
        return self.hcqt.n_frames

    def excerpt(self, seconds) -> "TrackFeatures":
        hcqt = self.hcqt.excerpt(seconds)
        return TrackFeatures(
            track_id=self.track_id, hcqt=hcqt, roll=self.roll.truncated(hcqt.n_frames)
        )


def patch_centers(n_frames: int, stride: int) -> range:
    if stride < 1:
        raise ValidationError(f"stride must be at least 1, got {stride}")
    return range(CONTEXT, n_frames - CONTEXT, stride)


def count_patches(n_frames: int, stride: int) -> int:
    if n_frames < PATCH_FRAMES:
        return 0
    return (n_frames - PATCH_FRAMES) // stride + 1


class PatchSequence(Dataset):
    """Patches of one track at a fixed stride, sliced on access."""

    def __init__(self, track: TrackFeatures, stride: int):
        self.track = track
        self.stride = stride
        self.centers = patch_centers(track.n_frames, stride)

    def __len__(self) -> int:
        return len(self.centers)

    def __getitem__(self, index: int) -> Patch:
        center = self.centers[index]
        values = self.track.hcqt.values[:, center - CONTEXT : center + CONTEXT + 1]
        return Patch.build(values, self.track.roll.activity[center])


def sample_patches(track: TrackFeatures, stride: int) -> PatchSequence:
    """Patches centred at frames 37, 37+stride, ... up to n_frames-38."""
    patches = PatchSequence(track, stride)
    if len(patches) == 0:
        logger.warning(
            f"Track {track.track_id} has {track.n_frames} frames, fewer than {PATCH_FRAMES}: no patches"
        )
    return patches


def choose_stride(target: int, frame_counts: Sequence[int]) -> int:
    """The stride whose total patch count over the corpus is nearest ``target``."""
    if target < 1:
        raise ValidationError(f"target must be positive, got {target}")
    longest = max(frame_counts, default=0)
    if longest < PATCH_FRAMES:
        raise ValidationError("No track is long enough to yield a patch")

    best_stride, best_gap = 1, None
    for stride in range(1, longest - PATCH_FRAMES + 2):
        total = sum(count_patches(n, stride) for n in frame_counts)
        gap = abs(total - target)
        if best_gap is None or gap < best_gap:
            best_stride, best_gap = stride, gap
        if total < target:
            # totals only shrink from here on
            break
    return best_stride


def build_corpus(tracks: List[TrackFeatures], stride: int) -> ConcatDataset:
    """All patches of ``tracks`` as one indexable dataset."""
    sequences = [sample_patches(track, stride) for track in tracks]
    sequences = [s for s in sequences if len(s)]
    if not sequences:
        raise ValidationError("No patches could be sampled from the given tracks")
    return ConcatDataset(sequences)
