import math
from typing import Optional, Tuple

import librosa
import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from multipitch.container import read_container, write_container
from multipitch.exceptions import ShapeError, TrackTooShortError, ValidationError
from multipitch.logger_utils import get_logger
from multipitch.signal.audio import SAMPLE_RATE, AudioTrack

logger = get_logger("signal.hcqt")

HARMONICS: Tuple[float, ...] = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0)
BINS_PER_SEMITONE = 3
BINS_PER_OCTAVE = 12 * BINS_PER_SEMITONE
N_OCTAVES = 6
N_BINS = N_OCTAVES * BINS_PER_OCTAVE
HOP_LENGTH = 512
FRAME_RATE = SAMPLE_RATE / HOP_LENGTH
LOWEST_MIDI = 24
F_C1 = float(librosa.midi_to_hz(LOWEST_MIDI))
# bin 3k+1 is centred on MIDI 24+k, so bin 0 sits one bin below C1
BIN_OFFSET = -1
CQT_Q = 1.0 / (2.0 ** (1.0 / BINS_PER_OCTAVE) - 1.0)
DEFAULT_COMPRESSION = 1.0


class HcqtTensor(BaseModel):
    """Log-compressed HCQT, values shaped ``[harmonic, frame, bin]``."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    harmonics: Tuple[float, ...] = HARMONICS
    frame_rate: float = FRAME_RATE
    tuning_offset: float = 0.0
    compression: float = DEFAULT_COMPRESSION

    @model_validator(mode="after")
    def check_shape(self):
        if (
            self.values.ndim != 3
            or self.values.shape[0] != len(HARMONICS)
            or self.values.shape[2] != N_BINS
        ):
            raise ShapeError(
                f"HCQT must be [{len(HARMONICS)}, frames, {N_BINS}], got {self.values.shape}"
            )
        if tuple(self.harmonics) != HARMONICS:
            raise ValidationError(f"Unexpected harmonic order {self.harmonics}")
        return self

    @property
    def n_frames(self) -> int:
        return int(self.values.shape[1])

    def excerpt(self, seconds: Optional[float]) -> "HcqtTensor":
        """First ``seconds`` of the track (the whole track for ``None``)."""
        if seconds is None:
            return self
        n = min(self.n_frames, int(math.floor(seconds * self.frame_rate)))
        return self.model_copy(update={"values": self.values[:, :n]})


def bin_frequencies(harmonic: float = 1.0, tuning: float = 0.0) -> np.ndarray:
    """Centre frequencies of the 216 bins of one HCQT channel, in Hz."""
    fmin = harmonic * F_C1 * 2.0 ** ((tuning / 100.0 + BIN_OFFSET / BINS_PER_SEMITONE) / 12.0)
    return librosa.cqt_frequencies(n_bins=N_BINS, fmin=fmin, bins_per_octave=BINS_PER_OCTAVE)


def min_samples(tuning: float = 0.0) -> int:
    """Length of the longest CQT filter, i.e. of one analysis window."""
    lowest = bin_frequencies(min(HARMONICS), tuning)[0]
    return int(math.ceil(CQT_Q * SAMPLE_RATE / lowest))


def n_frames_for(n_samples: int) -> int:
    return 1 + n_samples // HOP_LENGTH


def frame_time(frame_index: int) -> float:
    """Time of frame ``frame_index`` in seconds; frames are centred on ``k * 512``."""
    if frame_index < 0:
        raise ValidationError(f"Frame index must be non-negative, got {frame_index}")
    return frame_index * HOP_LENGTH / SAMPLE_RATE


def frame_times(n_frames: int) -> np.ndarray:
    return librosa.frames_to_time(np.arange(n_frames), sr=SAMPLE_RATE, hop_length=HOP_LENGTH)


def log_compress(x: np.ndarray, compression: float = DEFAULT_COMPRESSION) -> np.ndarray:
    if compression <= 0:
        raise ValidationError(f"Compression constant must be positive, got {compression}")
    return np.log1p(compression * x)


def _fit_frames(channel: np.ndarray, n_frames: int) -> np.ndarray:
    # per-octave downsampling can leave the stack one frame short
    if channel.shape[0] >= n_frames:
        return channel[:n_frames]
    return np.pad(channel, ((0, n_frames - channel.shape[0]), (0, 0)), mode="edge")


def compute_hcqt(
    track: AudioTrack, tuning: float = 0.0, compression: float = DEFAULT_COMPRESSION
) -> HcqtTensor:
    """One CQT per harmonic factor, all sharing the frame and bin axes.

    Tuning shifts the bin centre frequencies rather than resampling the audio.
    """
    if track.samples.shape[0] < min_samples(tuning):
        raise TrackTooShortError(
            f"track too short: {track.samples.shape[0]} samples, "
            f"one CQT window needs {min_samples(tuning)}"
        )

    channels = []
    for harmonic in HARMONICS:
        cqt = librosa.cqt(
            track.samples,
            sr=SAMPLE_RATE,
            hop_length=HOP_LENGTH,
            fmin=bin_frequencies(harmonic, tuning)[0],
            n_bins=N_BINS,
            bins_per_octave=BINS_PER_OCTAVE,
            tuning=0.0,
        )
        channels.append(np.abs(cqt).T)

    n_frames = n_frames_for(track.samples.shape[0])
    magnitudes = np.stack([_fit_frames(c, n_frames) for c in channels]).astype(np.float32)
    logger.debug(f"HCQT with {n_frames} frames, tuning {tuning:+.2f} cents")
    return HcqtTensor(
        values=log_compress(magnitudes, compression).astype(np.float32),
        tuning_offset=tuning,
        compression=compression,
    )


def save_hcqt(path, hcqt: HcqtTensor) -> None:
    write_container(
        path,
        "hcqt",
        {"values": hcqt.values},
        meta={
            "frame_rate": hcqt.frame_rate,
            "tuning_offset": hcqt.tuning_offset,
            "harmonics": list(hcqt.harmonics),
            "compression": hcqt.compression,
        },
    )


def load_hcqt(path) -> HcqtTensor:
    header, tensors = read_container(path, expected_kind="hcqt")
    meta = header["meta"]
    return HcqtTensor(
        values=tensors["values"],
        harmonics=tuple(meta["harmonics"]),
        frame_rate=meta["frame_rate"],
        tuning_offset=meta["tuning_offset"],
        compression=meta["compression"],
    )
