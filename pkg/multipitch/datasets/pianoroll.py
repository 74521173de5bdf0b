from typing import Iterable

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from multipitch.container import read_container, write_container
from multipitch.datasets.annotations import NoteEvent
from multipitch.exceptions import ShapeError, ValidationError
from multipitch.logger_utils import get_logger
from multipitch.signal import FRAME_RATE, frame_times

logger = get_logger("datasets.pianoroll")

LOWEST_MIDI = 24
HIGHEST_MIDI = 95
N_PITCHES = HIGHEST_MIDI - LOWEST_MIDI + 1


class PianoRoll(BaseModel):
    """Binary activity ``[frame, 72]`` over MIDI 24..95."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    activity: np.ndarray
    frame_rate: float = FRAME_RATE
    dropped: int = 0

    @model_validator(mode="after")
    def check_activity(self):
        if self.activity.ndim != 2 or self.activity.shape[1] != N_PITCHES:
            raise ShapeError(f"PianoRoll must be [frames, {N_PITCHES}], got {self.activity.shape}")
        if not np.isin(self.activity, (0, 1)).all():
            raise ValidationError("PianoRoll entries must be 0 or 1")
        return self

    @property
    def n_frames(self) -> int:
        return int(self.activity.shape[0])

    def truncated(self, n_frames: int) -> "PianoRoll":
        return self.model_copy(update={"activity": self.activity[:n_frames]})


def rasterize(notes: Iterable[NoteEvent], n_frames: int) -> PianoRoll:
    """Cell (k, p) is active iff a note of pitch p+24 has onset <= t_k < offset."""
    if n_frames < 1:
        raise ValidationError(f"n_frames must be at least 1, got {n_frames}")

    times = frame_times(n_frames)
    activity = np.zeros((n_frames, N_PITCHES), dtype=np.uint8)
    dropped = 0
    for note in notes:
        if not LOWEST_MIDI <= note.pitch <= HIGHEST_MIDI:
            dropped += 1
            continue
        active = (times >= note.onset) & (times < note.offset)
        activity[active, note.pitch - LOWEST_MIDI] = 1

    if dropped:
        logger.info(f"Dropped {dropped} note(s) outside MIDI {LOWEST_MIDI}-{HIGHEST_MIDI}")
    return PianoRoll(activity=activity, dropped=dropped)


def save_pianoroll(path, roll: PianoRoll) -> None:
    write_container(
        path,
        "pianoroll",
        {"activity": roll.activity},
        meta={"frame_rate": roll.frame_rate, "dropped": roll.dropped, "lowest_midi": LOWEST_MIDI},
    )


def load_pianoroll(path) -> PianoRoll:
    header, tensors = read_container(path, expected_kind="pianoroll")
    return PianoRoll(
        activity=tensors["activity"].astype(np.uint8),
        frame_rate=header["meta"]["frame_rate"],
        dropped=header["meta"]["dropped"],
    )
