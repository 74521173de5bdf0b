import os
from typing import Union

import librosa
import numpy as np
import soundfile as sf
from pydantic import BaseModel, ConfigDict, model_validator

from multipitch.exceptions import NotFoundError, ValidationError
from multipitch.logger_utils import get_logger

logger = get_logger("signal.audio")

SAMPLE_RATE = 22050
# estimate_tuning works on a 12-tone grid; one unit is a semitone
TUNING_RESOLUTION = 0.01
TUNING_N_FFT = 4096
SILENCE_RMS = 1e-7


class AudioTrack(BaseModel):
    """Mono audio at 22050 Hz."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    @model_validator(mode="after")
    def check_signal(self):
        if self.samples.ndim != 1:
            raise ValidationError(f"AudioTrack must be mono, got shape {self.samples.shape}")
        if self.sample_rate != SAMPLE_RATE:
            raise ValidationError(
                f"AudioTrack must be sampled at {SAMPLE_RATE} Hz, got {self.sample_rate}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise ValidationError("AudioTrack contains non-finite samples")
        return self

    @property
    def duration(self) -> float:
        return self.samples.shape[0] / self.sample_rate

    @classmethod
    def from_samples(cls, samples: np.ndarray, sample_rate: int) -> "AudioTrack":
        """Downmixes ``[channels, n]`` or ``[n, channels]`` input and resamples to 22050 Hz."""
        samples = np.asarray(samples, dtype=np.float32)
        if samples.ndim == 2:
            channel_axis = 0 if samples.shape[0] < samples.shape[1] else 1
            samples = samples.mean(axis=channel_axis)
        if sample_rate != SAMPLE_RATE:
            samples = librosa.resample(
                samples, orig_sr=sample_rate, target_sr=SAMPLE_RATE, res_type="polyphase"
            )
        return cls(samples=np.ascontiguousarray(samples, dtype=np.float32))


class TuningEstimate(BaseModel):
    cents: float
    silent: bool = False


def load_audio(path: Union[str, os.PathLike]) -> AudioTrack:
    """Reads a WAV/FLAC file as mono 22050 Hz audio."""
    if not os.path.exists(path):
        raise NotFoundError(f"No audio file at {path}")
    try:
        samples, sample_rate = sf.read(os.fspath(path), dtype="float32", always_2d=True)
    except RuntimeError as e:
        # soundfile raises LibsndfileError, a RuntimeError, on corrupt input
        raise ValidationError(f"Cannot decode {path}: {e}", code="unreadable_audio") from e
    return AudioTrack.from_samples(samples, sample_rate)


def write_audio(path: Union[str, os.PathLike], track: AudioTrack) -> None:
    sf.write(os.fspath(path), track.samples, track.sample_rate, subtype="FLOAT")


def estimate_tuning(track: AudioTrack) -> TuningEstimate:
    """Global deviation from the A440 semitone grid, in cents within [-50, 50)."""
    rms = float(np.sqrt(np.mean(np.square(track.samples, dtype=np.float64)))) if track.samples.size else 0.0
    if rms < SILENCE_RMS:
        logger.warning("Silent input, assuming zero tuning offset")
        return TuningEstimate(cents=0.0, silent=True)

    semitones = librosa.estimate_tuning(
        y=track.samples,
        sr=track.sample_rate,
        n_fft=TUNING_N_FFT,
        resolution=TUNING_RESOLUTION,
        bins_per_octave=12,
    )
    cents = float(np.round(100.0 * semitones, 6))
    if cents >= 50.0:
        cents -= 100.0
    return TuningEstimate(cents=cents)
