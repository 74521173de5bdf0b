"""Desk-scale acceptance runs. Deselected by default; run with ``pytest -m slow``."""

import os

import numpy as np
import pytest
import torch

from conftest import random_track
from multipitch.cli import commands
from multipitch.cli import experiment as ex
from multipitch.datasets import NO_AUGMENTATION, TrainStream, ValStream, build_corpus, synthesize_corpus
from multipitch.evaluation import frame_metrics, read_eval, scatter_points, variance_report
from multipitch.models import Family, build_model, config_for
from multipitch.training import TrainConfig, train_steps

pytestmark = pytest.mark.slow

OVERFIT_STEPS = 200
SMALLEST = {
    Family.CNN: "CNN:XS",
    Family.DCNN: "DCNN:S",
    Family.DRCNN: "DRCNN:S",
    Family.UNET: "Unet:S",
    Family.SAUNET: "SAUnet:M",
    Family.SAUSNET: "SAUSnet:M",
    Family.BLUNET: "BLUnet:M",
    Family.PUNET: "PUnet:M",
}


def _training_f_measure(model, corpus) -> float:
    preds, targets = [], []
    with torch.no_grad():
        for batch in ValStream(corpus, 25):
            preds.append(model(batch.inputs).pitch_activity.numpy())
            targets.append(batch.pitch.numpy())
    return frame_metrics(np.concatenate(preds), np.concatenate(targets))[2]


@pytest.mark.parametrize("family", list(Family))
def test_fifty_patches_can_be_memorized(family):
    # 124 frames at stride 1 give exactly 50 patches
    corpus = build_corpus([random_track("memorize", 124, seed=3, n_notes=10)], stride=1)
    assert len(corpus) == 50
    model = build_model(config_for(SMALLEST[family]), seed=0)
    config = TrainConfig(batch_size=25, initial_lr=1e-3, device="cpu")
    stream = TrainStream(corpus, 25, seed=0, policy=NO_AUGMENTATION)
    model = train_steps(model, stream, OVERFIT_STEPS, config)

    required = 95.0 if family == Family.CNN else 90.0
    assert _training_f_measure(model, corpus) >= required


def _experiment(root, name, corpus, cache, model, seeds, deterministic=False, **train):
    fields = dict(max_epochs=2, batches_per_epoch=10, batch_size=25, device="cpu", deterministic=deterministic)
    fields.update(train)
    return ex.ExperimentConfig(
        name=name,
        model=model,
        train=fields,
        data=dict(
            manifest=str(corpus / "manifest.csv"),
            features=str(cache),
            split="tagged",
            train_examples=2_000,
            val_examples=500,
        ),
        seeds=seeds,
        output_dir=str(root / "runs"),
    )


def _synthetic(root, n_tracks, partition, duration):
    corpus = root / "corpus"
    synthesize_corpus(str(corpus), n_tracks=n_tracks, duration=duration, seed=0, partition=partition)
    cache = root / "cache"
    _, errors = commands.cmd_extract(str(corpus / "manifest.csv"), str(cache), workers=os.cpu_count() or 1)
    assert not errors
    return corpus, cache


def test_synthetic_end_to_end(tmp_path):
    corpus, cache = _synthetic(tmp_path, 60, (40, 10, 10), 10.0)
    config = _experiment(
        tmp_path, "e2e", corpus, cache, "CNN:M", [0], max_epochs=10, batches_per_epoch=200
    )
    config = config.model_copy(update={"data": config.data.model_copy(update={"train_examples": 12_000})})
    run_dirs, errors = commands.cmd_train(config)
    assert not errors

    report = read_eval(os.path.join(run_dirs[0], ex.EVAL_FILE))
    assert len(report.tracks) == 10
    assert report.macro.average_precision >= 90.0


def test_seed_variance(tmp_path):
    corpus, cache = _synthetic(tmp_path, 6, (4, 1, 1), 6.0)

    varied = _experiment(tmp_path, "varied", corpus, cache, "CNN:XS", [0, 1, 2])
    run_dirs, errors = commands.cmd_train(varied)
    assert not errors
    runs = [read_eval(os.path.join(d, ex.EVAL_FILE)) for d in run_dirs]
    summary = variance_report(runs)
    assert summary.macro_stat("average_precision").spread > 0

    points = scatter_points(runs)
    assert len(points) == 3 and len({p.params for p in points}) == 1

    repeated = []
    for name in ("again-a", "again-b", "again-c"):
        config = _experiment(tmp_path, name, corpus, cache, "CNN:XS", [7], deterministic=True)
        run_dirs, errors = commands.cmd_train(config)
        assert not errors
        repeated.append(read_eval(os.path.join(run_dirs[0], ex.EVAL_FILE)))
    torch.use_deterministic_algorithms(False)
    summary = variance_report(repeated)
    for stats in summary.macro + summary.per_track:
        assert stats.spread == 0.0, (stats.track_id, stats.metric)
