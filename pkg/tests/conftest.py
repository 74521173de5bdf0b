import numpy as np
import pytest
import torch

from multipitch.datasets import (
    PATCH_FRAMES,
    NoteEvent,
    Patch,
    TrackFeatures,
    build_corpus,
    rasterize,
)
from multipitch.models import Family, ModelConfig
from multipitch.signal import HARMONICS, N_BINS, SAMPLE_RATE, AudioTrack, HcqtTensor

# one tiny configuration per family, small enough for gradient checks
TINY_CHANNELS = (2, 3, 2, 2)
TINY_CONFIGS = {
    Family.CNN: dict(),
    Family.DCNN: dict(),
    Family.DRCNN: dict(),
    Family.UNET: dict(gamma=1),
    Family.SAUNET: dict(gamma=1, lam=4),
    Family.SAUSNET: dict(gamma=1, lam=4),
    Family.BLUNET: dict(gamma=1, lam=2),
    Family.PUNET: dict(gamma=1),
}


def tiny_config(family: Family, **overrides) -> ModelConfig:
    fields = dict(family=family, channels=TINY_CHANNELS, name=f"{family.value}:tiny")
    fields.update(TINY_CONFIGS[family])
    fields.update(overrides)
    return ModelConfig(**fields)


def sine(midi: float, seconds: float = 4.0, amplitude: float = 0.5) -> AudioTrack:
    t = np.arange(int(seconds * SAMPLE_RATE)) / SAMPLE_RATE
    f0 = 440.0 * 2.0 ** ((midi - 69) / 12.0)
    return AudioTrack(samples=(amplitude * np.sin(2 * np.pi * f0 * t)).astype(np.float32))


def random_track(
    track_id: str, n_frames: int, seed: int = 0, n_notes: int = 6
) -> TrackFeatures:
    """Random HCQT whose energy follows a random piano roll, so models can fit it."""
    rng = np.random.default_rng(seed)
    notes = []
    duration = n_frames * 512 / SAMPLE_RATE
    for _ in range(n_notes):
        onset = float(rng.uniform(0, duration * 0.8))
        notes.append(
            NoteEvent(
                onset=onset,
                offset=onset + float(rng.uniform(0.2, 1.0)),
                pitch=int(rng.integers(40, 80)),
            )
        )
    roll = rasterize(notes, n_frames)
    values = rng.uniform(0.0, 0.05, size=(len(HARMONICS), n_frames, N_BINS))
    frames, pitches = np.nonzero(roll.activity)
    for h in range(len(HARMONICS)):
        values[h, frames, 3 * pitches + 1] += 1.0
    return TrackFeatures(
        track_id=track_id, hcqt=HcqtTensor(values=values.astype(np.float32)), roll=roll
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def patch(rng):
    target = np.zeros(72, dtype=np.uint8)
    target[[10, 20, 30]] = 1
    values = rng.uniform(0.0, 1.0, size=(len(HARMONICS), PATCH_FRAMES, N_BINS))
    return Patch.build(values, target)


@pytest.fixture
def tracks():
    return [random_track(f"trk-{i}", 200 + 20 * i, seed=i) for i in range(3)]


@pytest.fixture
def corpus(tracks):
    return build_corpus(tracks, stride=10)


@pytest.fixture
def batch_input():
    torch.manual_seed(0)
    return torch.rand(2, len(HARMONICS), PATCH_FRAMES, N_BINS)




@pytest.fixture(autouse=True)
def no_musicnet_metadata(monkeypatch):
    monkeypatch.delenv("MULTIPITCH_MUSICNET_METADATA", raising=False)
