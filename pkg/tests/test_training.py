import math

import numpy as np
import pytest
import torch

from conftest import random_track, tiny_config
from multipitch.datasets import NO_AUGMENTATION, TrainStream, ValStream, build_corpus
from multipitch.exceptions import NonFiniteLossError, ShapeError, ValidationError
from multipitch.models import Family, ModelOutput, build_model, load_checkpoint
from multipitch.training import (
    PlateauSchedule,
    TrainConfig,
    TrainHistory,
    loss_mpe,
    loss_polyphony,
    loss_total,
    read_history,
    train,
    train_steps,
    validation_loss,
    write_history,
)

# losses


def test_bce_of_a_coin_flip_is_ln2():
    pred = torch.full((4, 72), 0.5)
    target = (torch.rand(4, 72) < 0.5).float()
    assert loss_mpe(pred, target).item() == pytest.approx(math.log(2), rel=1e-6)


def test_saturated_prediction_has_near_zero_loss():
    target = (torch.rand(4, 72) < 0.3).float()
    pred = target.clamp(1e-6, 1 - 1e-6)
    assert loss_mpe(pred, target).item() < 1e-5


def test_bce_matches_explicit_formula():
    torch.manual_seed(0)
    pred = torch.rand(3, 72, dtype=torch.float64) * 0.98 + 0.01
    target = (torch.rand(3, 72) < 0.3).double()
    expected = -(target * pred.log() + (1 - target) * (1 - pred).log()).mean()
    assert loss_mpe(pred, target).item() == pytest.approx(expected.item(), rel=1e-12)
    with pytest.raises(ShapeError):
        loss_mpe(pred, target[:, :71])


def test_total_loss_adds_weighted_polyphony_term():
    torch.manual_seed(0)
    pitch = torch.rand(2, 72)
    target = (torch.rand(2, 72) < 0.2).float()
    logits = torch.randn(2, 24)
    poly = torch.tensor([3, 0])

    plain = loss_total(ModelOutput(pitch), target)
    combined = loss_total(ModelOutput(pitch, logits), target, poly, poly_weight=0.04)
    expected = loss_mpe(pitch, target) + 0.04 * loss_polyphony(logits, poly)
    assert plain.item() == pytest.approx(loss_mpe(pitch, target).item())
    assert combined.item() == pytest.approx(expected.item())
    with pytest.raises(ValidationError):
        loss_total(ModelOutput(pitch), target, poly)
    with pytest.raises(ShapeError):
        loss_polyphony(logits, poly[:1])


# schedule


def test_lr_halves_after_five_bad_epochs():
    schedule = PlateauSchedule(initial_lr=1.0)
    trace = [1.0] + [0.9] * 6
    improved = [schedule.step(v) for v in trace]
    assert improved == [True, True, False, False, False, False, False]
    # epochs 3..7 do not improve on 0.9; the rate halves after the fifth of them
    assert schedule.lrs == [1.0] * 7
    assert schedule.lr == 0.5
    assert schedule.best_epoch == 2


def test_early_stop_after_twelve_bad_epochs():
    schedule = PlateauSchedule(initial_lr=1.0)
    schedule.step(1.0)
    for epoch in range(11):
        schedule.step(2.0)
        assert not schedule.should_stop
    schedule.step(2.0)
    assert schedule.should_stop
    assert schedule.bad_epochs == 12
    assert schedule.lr == 0.25
    assert schedule.best == 1.0


def test_lr_sequence_is_monotone_halving(rng):
    schedule = PlateauSchedule(initial_lr=0.001)
    for value in rng.uniform(0, 1, size=200):
        schedule.step(float(value))
        schedule.step(float(value) + 10)
    lrs = np.array(schedule.lrs + [schedule.lr])
    assert np.all(np.diff(lrs) <= 0)
    ratios = lrs[1:][np.diff(lrs) < 0] / lrs[:-1][np.diff(lrs) < 0]
    np.testing.assert_allclose(ratios, 0.5)


def test_tolerance_requires_a_real_improvement():
    schedule = PlateauSchedule(tolerance=0.1)
    assert schedule.step(1.0)
    assert not schedule.step(0.95)
    assert schedule.step(0.85)


def test_schedule_arguments():
    with pytest.raises(ValidationError):
        PlateauSchedule(patience=0)
    with pytest.raises(ValidationError):
        PlateauSchedule(factor=1.0)
    with pytest.raises(ValidationError):
        TrainConfig(lr_factor=0.0)


# trainer


@pytest.fixture
def streams(tracks):
    corpus = build_corpus(tracks, stride=20)
    return (
        TrainStream(corpus, batch_size=4, seed=0, policy=NO_AUGMENTATION),
        ValStream(corpus, batch_size=8),
    )


def _config(**overrides):
    fields = dict(max_epochs=3, batches_per_epoch=2, batch_size=4, initial_lr=1e-3, device="cpu")
    fields.update(overrides)
    return TrainConfig(**fields)


def test_defaults_are_the_published_protocol():
    config = TrainConfig()
    assert (config.batch_size, config.max_epochs, config.batches_per_epoch) == (25, 100, 3800)
    assert (config.plateau_patience, config.lr_factor, config.early_stop_patience) == (5, 0.5, 12)
    assert config.poly_loss_weight == 0.04
    assert config.initial_lr is None


def test_train_records_history_and_checkpoints(streams, tmp_path):
    model = build_model(tiny_config(Family.CNN), seed=0)
    model, history = train(model, *streams, _config(), checkpoint_dir=str(tmp_path))

    assert [e.epoch for e in history.epochs] == [1, 2, 3]
    assert len(history.timings) == 3
    assert history.lrs == [1e-3] * 3
    assert history.best_epoch == int(np.argmin(history.val_losses)) + 1
    assert history.best_val_loss == min(history.val_losses)
    assert (tmp_path / "best.ckpt").exists() and (tmp_path / "final.ckpt").exists()
    assert not model.training

    _, meta = load_checkpoint(tmp_path / "final.ckpt")
    assert meta["epoch"] == 3


def test_train_returns_best_epoch_weights(streams, tmp_path):
    model = build_model(tiny_config(Family.CNN), seed=0)
    config = _config(max_epochs=4)
    model, history = train(model, *streams, config, checkpoint_dir=str(tmp_path))
    best, meta = load_checkpoint(tmp_path / "best.ckpt")
    assert meta["epoch"] == history.best_epoch
    for name, value in model.state_dict().items():
        assert torch.equal(best.state_dict()[name], value), name
    assert validation_loss(model, streams[1], config) == pytest.approx(history.best_val_loss, rel=1e-5)


def test_early_stopping_ends_training(streams):
    model = build_model(tiny_config(Family.CNN), seed=0)
    # a negligible learning rate never improves by the tolerance
    config = _config(
        max_epochs=50, early_stop_patience=3, plateau_patience=2, initial_lr=1e-12, tolerance=1e-3
    )
    _, history = train(model, *streams, config)
    assert history.stopped_early
    assert len(history.epochs) <= 4
    assert history.best_epoch is not None


def test_non_finite_loss_is_reported(streams):
    model = build_model(tiny_config(Family.CNN), seed=0)
    with torch.no_grad():
        for p in model.parameters():
            p.fill_(float("nan"))
    with pytest.raises(NonFiniteLossError) as info:
        train(model, *streams, _config())
    assert info.value.epoch == 1 and info.value.batch == 1
    assert info.value.code == "non_finite_loss"


def test_training_is_deterministic_for_a_seed(tracks):
    corpus = build_corpus(tracks, stride=20)

    def run():
        model = build_model(tiny_config(Family.UNET), seed=5)
        stream = TrainStream(corpus, batch_size=4, seed=5)
        return train_steps(model, stream, steps=3, config=_config(seed=5, deterministic=True))

    a, b = run(), run()
    for name, value in a.state_dict().items():
        assert torch.equal(b.state_dict()[name], value), name
    torch.use_deterministic_algorithms(False)


def test_polyphony_head_trains_with_combined_loss(streams):
    model = build_model(tiny_config(Family.PUNET), seed=0)
    _, history = train(model, *streams, _config(max_epochs=1))
    assert np.isfinite(history.epochs[0].train_loss)


def test_history_round_trip(tmp_path, streams):
    model = build_model(tiny_config(Family.CNN), seed=0)
    _, history = train(model, *streams, _config())
    write_history(str(tmp_path), history)
    assert (tmp_path / "history.csv").read_text().splitlines()[0] == "epoch;train_loss;val_loss;lr"
    assert (tmp_path / "timing.csv").exists()

    loaded = read_history(str(tmp_path))
    assert loaded.epochs == history.epochs
    assert loaded.best_epoch == history.best_epoch
    assert isinstance(loaded, TrainHistory)


def test_unaugmented_overfit_smoke():
    track = random_track("fit", 124)
    corpus = build_corpus([track], stride=1)
    model = build_model(tiny_config(Family.CNN), seed=0)
    config = _config(initial_lr=3e-3)
    before = validation_loss(model, ValStream(corpus, 25), config)
    model = train_steps(model, TrainStream(corpus, 25, seed=0, policy=NO_AUGMENTATION), 20, config)
    after = validation_loss(model, ValStream(corpus, 25), config)
    assert after < before
