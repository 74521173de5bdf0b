import numpy as np
import pytest

from multipitch.datasets import (
    AugmentationPolicy,
    Patch,
    augment_noise,
    augment_random_eq,
    augment_transpose,
    augment_tune,
    eq_weights,
)
from multipitch.datasets.augment import NOISE_STD, TUNE_SUBSHIFTS, shift_axis
from multipitch.exceptions import ValidationError

N_CASES = 10_000


def _random_patch(rng) -> Patch:
    target = (rng.random(72) < 0.1).astype(np.uint8)
    return Patch.build(rng.uniform(0, 1, size=(6, 75, 216)), target)


def test_shift_axis_zero_fills():
    x = np.arange(5.0)
    assert shift_axis(x, 2).tolist() == [0, 0, 0, 1, 2]
    assert shift_axis(x, -2).tolist() == [2, 3, 4, 0, 0]
    assert shift_axis(x, 0).tolist() == x.tolist()


def test_transpose_keeps_labels_consistent(rng):
    base = np.zeros((6, 75, 216), dtype=np.float32)
    for case in range(N_CASES):
        pitches = rng.choice(72, size=int(rng.integers(0, 6)), replace=False)
        target = np.zeros(72, dtype=np.uint8)
        target[pitches] = 1
        inputs = base.copy()
        inputs[:, :, 3 * pitches + 1] = 1.0
        shift = int(rng.integers(-5, 6))

        moved = augment_transpose(Patch.build(inputs, target), shift)
        expected = shift_axis(target, shift)
        np.testing.assert_array_equal(moved.pitch_target, expected)
        peaks = np.nonzero(moved.input[0, 0])[0]
        assert sorted(peaks.tolist()) == sorted((3 * np.nonzero(expected)[0] + 1).tolist())
        assert moved.polyphony_target == int(expected.sum())


def test_transpose_rejects_large_or_fractional_shifts(patch):
    with pytest.raises(ValidationError):
        augment_transpose(patch, 6)
    with pytest.raises(ValidationError):
        augment_transpose(patch, 1.5)


def test_tuning_preserves_labels(rng):
    patch = _random_patch(rng)
    for _ in range(N_CASES):
        subshift = float(rng.choice(TUNE_SUBSHIFTS))
        tuned = augment_tune(patch, subshift)
        assert tuned.pitch_target is patch.pitch_target
        assert tuned.input.shape == patch.input.shape


def test_tuning_half_bin_is_mean_of_neighbours():
    x = np.zeros((6, 75, 216), dtype=np.float32)
    x[..., 100] = 1.0
    patch = Patch.build(x, np.zeros(72))
    up = augment_tune(patch, 0.5).input[0, 0]
    assert up[100] == pytest.approx(0.5) and up[101] == pytest.approx(0.5)
    whole = augment_tune(patch, -1.0).input[0, 0]
    assert whole[99] == 1.0 and whole[100] == 0.0
    with pytest.raises(ValidationError):
        augment_tune(patch, 0.25)


def test_noise_standard_deviation(rng):
    patch = Patch.build(np.zeros((6, 75, 216)), np.zeros(72))
    for seed in rng.integers(0, 2**31, size=100):
        noisy = augment_noise(patch, seed=int(seed))
        assert 0.95 * NOISE_STD <= float(noisy.input.std()) <= 1.05 * NOISE_STD
        assert noisy.pitch_target is patch.pitch_target


def test_eq_weights_lie_in_unit_interval(rng):
    for _ in range(N_CASES):
        alpha, beta = int(rng.integers(1, 22)), int(rng.integers(1, 217))
        weights = eq_weights(alpha, beta)
        assert weights.shape == (216,)
        assert np.all(weights > 0) and np.all(weights <= 1)
        assert weights[beta - 1] == pytest.approx(1.0)


def test_eq_depth_scales_with_alpha():
    for alpha in (1, 7, 21):
        assert eq_weights(alpha, 1)[-1] == pytest.approx(1.0 - alpha / 21, abs=1e-6)


def test_eq_parameter_ranges():
    with pytest.raises(ValidationError):
        eq_weights(0, 10)
    with pytest.raises(ValidationError):
        eq_weights(5, 217)


def test_random_eq_is_seeded(patch):
    a = augment_random_eq(patch, seed=5)
    b = augment_random_eq(patch, seed=5)
    np.testing.assert_array_equal(a.input, b.input)
    assert np.all(a.input <= patch.input + 1e-7)


def test_policy_draws_are_reproducible(patch):
    policy = AugmentationPolicy()
    a = policy.apply(patch, np.random.default_rng(0))
    b = policy.apply(patch, np.random.default_rng(0))
    np.testing.assert_array_equal(a.input, b.input)
    np.testing.assert_array_equal(a.pitch_target, b.pitch_target)


def test_disabled_policy_is_identity(patch):
    policy = AugmentationPolicy(noise=False, transpose=False, tune=False, eq=False)
    assert not policy.enabled
    assert policy.apply(patch, np.random.default_rng(0)) is patch
