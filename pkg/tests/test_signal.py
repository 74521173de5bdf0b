import math

import numpy as np
import pytest
import soundfile as sf

from conftest import sine
from multipitch.exceptions import NotFoundError, ShapeError, TrackTooShortError, ValidationError
from multipitch.signal import (
    FRAME_RATE,
    HARMONICS,
    N_BINS,
    SAMPLE_RATE,
    AudioTrack,
    HcqtTensor,
    TuningEstimate,
    bin_frequencies,
    compute_hcqt,
    estimate_tuning,
    frame_time,
    load_audio,
    load_hcqt,
    log_compress,
    min_samples,
    n_frames_for,
    save_hcqt,
)

C4_BIN = 109


@pytest.fixture(scope="module")
def c4_hcqt():
    return compute_hcqt(sine(60, seconds=4.0))


def _peak_bin(hcqt: HcqtTensor, harmonic: float) -> int:
    channel = hcqt.values[HARMONICS.index(harmonic)]
    middle = channel[channel.shape[0] // 4 : 3 * channel.shape[0] // 4]
    return int(np.argmax(middle.mean(axis=0)))


def test_bin_grid_centres_midi_pitches():
    freqs = bin_frequencies(1.0)
    assert freqs.shape == (N_BINS,)
    assert freqs[C4_BIN] == pytest.approx(261.6256, rel=1e-4)
    assert freqs[1] == pytest.approx(32.7032, rel=1e-4)


def test_hcqt_shape_and_frames(c4_hcqt):
    n = int(4.0 * SAMPLE_RATE)
    assert c4_hcqt.values.shape == (len(HARMONICS), n_frames_for(n), N_BINS)
    assert c4_hcqt.n_frames == 1 + n // 512
    assert c4_hcqt.values.dtype == np.float32
    assert np.all(c4_hcqt.values >= 0)


@pytest.mark.parametrize(
    "harmonic, expected",
    [(1.0, C4_BIN), (2.0, 73), (0.5, 145), (3.0, C4_BIN - round(36 * math.log2(3)))],
)
def test_harmonic_alignment(c4_hcqt, harmonic, expected):
    assert _peak_bin(c4_hcqt, harmonic) == expected


def test_tuning_shifts_bins_not_audio():
    detuned = sine(60.3, seconds=4.0)
    hcqt = compute_hcqt(detuned, tuning=30.0)
    assert hcqt.tuning_offset == 30.0
    assert _peak_bin(hcqt, 1.0) == C4_BIN


def test_too_short_track():
    shortest = min_samples()
    assert shortest == math.ceil((1 / (2 ** (1 / 36) - 1)) * SAMPLE_RATE / bin_frequencies(0.5)[0])
    with pytest.raises(TrackTooShortError):
        compute_hcqt(AudioTrack(samples=np.zeros(shortest - 1, dtype=np.float32)))


def test_frame_time():
    assert frame_time(0) == 0.0
    assert frame_time(43) == pytest.approx(43 * 512 / 22050)
    assert FRAME_RATE == pytest.approx(43.066, abs=1e-3)
    with pytest.raises(ValidationError):
        frame_time(-1)


def test_log_compress_is_monotone(rng):
    x = np.sort(rng.uniform(0, 10, size=100))
    for c in (0.1, 1.0, 100.0):
        assert np.all(np.diff(log_compress(x, c)) > 0)
    assert log_compress(np.zeros(3)).tolist() == [0.0, 0.0, 0.0]
    with pytest.raises(ValidationError):
        log_compress(x, 0.0)


def test_hcqt_rejects_bad_shape():
    with pytest.raises(ShapeError):
        HcqtTensor(values=np.zeros((5, 10, N_BINS), dtype=np.float32))


def test_hcqt_excerpt(c4_hcqt):
    excerpt = c4_hcqt.excerpt(1.0)
    assert excerpt.n_frames == math.floor(FRAME_RATE)
    assert c4_hcqt.excerpt(None) is c4_hcqt
    assert c4_hcqt.excerpt(100.0).n_frames == c4_hcqt.n_frames


def test_hcqt_save_load(tmp_path, c4_hcqt):
    path = tmp_path / "c4.hcqt"
    save_hcqt(path, c4_hcqt)
    loaded = load_hcqt(path)
    np.testing.assert_array_equal(loaded.values, c4_hcqt.values)
    assert loaded.harmonics == HARMONICS
    assert loaded.frame_rate == c4_hcqt.frame_rate


def test_tuning_estimate_of_detuned_tone():
    estimate = estimate_tuning(sine(69.2, seconds=3.0))
    assert not estimate.silent
    assert estimate.cents == pytest.approx(20.0, abs=5.0)
    assert -50.0 <= estimate.cents < 50.0


@pytest.mark.parametrize("hz, cents, tolerance", [(440.0, 0.0, 1.0), (446.4, 25.0, 2.0)])
def test_tuning_estimate_of_a4(hz, cents, tolerance):
    midi = 69 + 12 * np.log2(hz / 440.0)
    assert estimate_tuning(sine(midi, seconds=3.0)).cents == pytest.approx(cents, abs=tolerance)


def test_tuning_of_silence():
    estimate = estimate_tuning(AudioTrack(samples=np.zeros(SAMPLE_RATE, dtype=np.float32)))
    assert estimate.silent
    assert estimate.cents == 0.0


def test_tuning_of_an_empty_track_is_silent():
    estimate = estimate_tuning(AudioTrack(samples=np.zeros(0, dtype=np.float32)))
    assert estimate == TuningEstimate(cents=0.0, silent=True)


def test_load_audio_downmixes_and_resamples(tmp_path):
    t = np.arange(44100) / 44100
    stereo = np.stack([np.sin(2 * np.pi * 440 * t), np.zeros_like(t)], axis=1)
    path = tmp_path / "stereo.wav"
    sf.write(path, stereo, 44100)

    track = load_audio(path)
    assert track.sample_rate == SAMPLE_RATE
    assert track.samples.ndim == 1
    assert abs(track.samples.shape[0] - SAMPLE_RATE) <= 1
    assert np.max(np.abs(track.samples)) == pytest.approx(0.5, abs=0.05)


def test_load_audio_errors(tmp_path):
    with pytest.raises(NotFoundError):
        load_audio(tmp_path / "missing.wav")
    garbage = tmp_path / "garbage.wav"
    garbage.write_bytes(b"not audio at all")
    with pytest.raises(ValidationError) as info:
        load_audio(garbage)
    assert info.value.code == "unreadable_audio"


def test_audio_track_validation():
    with pytest.raises(ValidationError):
        AudioTrack(samples=np.array([0.0, np.nan], dtype=np.float32))
    with pytest.raises(ValidationError):
        AudioTrack(samples=np.zeros((2, 10), dtype=np.float32))
