import numpy as np
import pytest

from multipitch.evaluation import (
    THRESHOLD,
    TrackMetrics,
    accuracy_score,
    aggregate,
    average_precision,
    confusion_counts,
    frame_metrics,
    track_metrics,
)
from multipitch.exceptions import ShapeError, ValidationError

N_INSTANCES = 1000


def _cell_loop(pred, target, threshold):
    tp = fp = fn = 0
    for k in range(pred.shape[0]):
        for p in range(pred.shape[1]):
            active = pred[k, p] >= threshold
            if active and target[k, p]:
                tp += 1
            elif active:
                fp += 1
            elif target[k, p]:
                fn += 1
    return tp, fp, fn


def _ap_all_thresholds(pred, target):
    """Sum over every distinct score of recall gain times precision at that score."""
    positives = target.sum()
    ap, previous_recall = 0.0, 0.0
    for t in sorted(set(pred.ravel().tolist()), reverse=True):
        active = pred >= t
        tp = np.sum(active & target)
        precision = tp / np.sum(active)
        recall = tp / positives
        ap += (recall - previous_recall) * precision
        previous_recall = recall
    return 100.0 * ap


def _instance(rng):
    shape = (int(rng.integers(1, 8)), int(rng.integers(1, 8)))
    pred = np.round(rng.random(shape), 2)
    target = rng.random(shape) < rng.uniform(0.1, 0.6)
    return pred, target


def test_counts_and_scores_match_brute_force(rng):
    for _ in range(N_INSTANCES):
        pred, target = _instance(rng)
        tp, fp, fn = _cell_loop(pred, target, THRESHOLD)
        assert confusion_counts(pred, target) == (tp, fp, fn)

        precision, recall, f_measure = frame_metrics(pred, target)
        if tp + fp:
            assert precision == pytest.approx(100.0 * tp / (tp + fp), rel=1e-9)
        if tp + fn:
            assert recall == pytest.approx(100.0 * tp / (tp + fn), rel=1e-9)
        if tp:
            assert f_measure == pytest.approx(200.0 * tp / (2 * tp + fp + fn), rel=1e-9)
        if tp + fp + fn:
            assert accuracy_score(pred, target) == pytest.approx(100.0 * tp / (tp + fp + fn), rel=1e-9)


def test_average_precision_matches_all_thresholds_oracle(rng):
    checked = 0
    for _ in range(N_INSTANCES):
        pred, target = _instance(rng)
        if not target.any():
            assert average_precision(pred, target) is None
            continue
        assert average_precision(pred, target) == pytest.approx(_ap_all_thresholds(pred, target), rel=1e-9)
        checked += 1
    assert checked > N_INSTANCES // 2


def test_hand_enumerated_average_precision():
    ap = average_precision(np.array([0.9, 0.8, 0.7]), np.array([1, 0, 1]))
    assert ap == pytest.approx(250.0 / 3.0, abs=1e-9)
    assert round(ap, 2) == 83.33


def test_one_false_positive():
    pred = np.array([[0.9, 0.5, 0.1, 0.0]])
    target = np.array([[1, 0, 0, 0]])
    precision, recall, f_measure = frame_metrics(pred, target)
    assert (precision, recall) == (50.0, 100.0)
    assert f_measure == pytest.approx(66.67, abs=0.01)
    assert accuracy_score(pred, target) == 50.0


def test_accuracy_with_one_of_each_error():
    pred = np.array([[0.9, 0.9, 0.1]])
    target = np.array([[1, 0, 1]])
    assert accuracy_score(pred, target) == pytest.approx(100.0 / 3.0)


def test_threshold_is_inclusive():
    assert confusion_counts(np.array([0.4]), np.array([1])) == (1, 0, 0)
    assert confusion_counts(np.array([0.3999]), np.array([1])) == (0, 0, 1)


def test_empty_denominators():
    silent = np.zeros((3, 4))
    assert frame_metrics(silent, silent.astype(bool)) == (100.0, 100.0, 100.0)
    assert accuracy_score(silent, silent) == 100.0

    hallucinated = np.ones((3, 4))
    assert frame_metrics(hallucinated, silent) == (0.0, 0.0, 0.0)
    missed = np.ones((3, 4))
    assert frame_metrics(silent, missed) == (0.0, 0.0, 0.0)


def test_accuracy_never_exceeds_f_measure(rng):
    for _ in range(N_INSTANCES):
        pred, target = _instance(rng)
        assert accuracy_score(pred, target) <= frame_metrics(pred, target)[2] + 1e-9


def test_average_precision_ignores_monotone_transforms(rng):
    for _ in range(100):
        pred = rng.random((20, 72))
        target = rng.random((20, 72)) < 0.1
        target[0, 0] = True
        squashed = 1.0 / (1.0 + np.exp(-5.0 * (pred - 0.3)))
        assert average_precision(pred ** 3, target) == pytest.approx(average_precision(pred, target), rel=1e-9)
        assert average_precision(squashed, target) == pytest.approx(average_precision(pred, target), rel=1e-9)


def test_frame_metrics_agree_with_mir_eval(rng):
    mir_eval = pytest.importorskip("mir_eval")
    for _ in range(20):
        pred = rng.random((50, 72))
        target = rng.random((50, 72)) < 0.05
        target[:, 30] = True
        times = np.arange(50) * 512 / 22050
        hz = 440.0 * 2.0 ** ((np.arange(72) + 24 - 69) / 12.0)
        ref = [hz[np.nonzero(row)[0]] for row in target]
        est = [hz[np.nonzero(row >= THRESHOLD)[0]] for row in pred]
        scores = mir_eval.multipitch.metrics(times, ref, times, est)

        precision, recall, _ = frame_metrics(pred, target)
        assert precision == pytest.approx(100.0 * scores[0], rel=1e-9)
        assert recall == pytest.approx(100.0 * scores[1], rel=1e-9)
        assert accuracy_score(pred, target) == pytest.approx(100.0 * scores[2], rel=1e-9)


def test_shape_mismatch():
    with pytest.raises(ShapeError):
        frame_metrics(np.zeros((2, 72)), np.zeros((3, 72)))


def test_track_metrics_and_macro_average():
    target = np.zeros((10, 72), dtype=bool)
    target[:, 5] = True
    perfect = track_metrics("a", target.astype(float), target)
    silent = track_metrics("b", np.zeros((4, 72)), np.zeros((4, 72), dtype=bool))
    assert perfect.f_measure == 100.0 and perfect.average_precision == 100.0
    assert perfect.n_frames == 10
    assert not silent.ap_defined

    half = TrackMetrics(track_id="c", precision=50, recall=50, f_measure=50, average_precision=50, accuracy=40)
    macro = aggregate([perfect, silent, half])
    assert macro.n_tracks == 3
    assert macro.f_measure == pytest.approx(250.0 / 3)
    # the silent track is left out of the AP mean only
    assert macro.average_precision == pytest.approx(75.0)
    assert macro.n_ap_excluded == 1
    with pytest.raises(ValidationError):
        aggregate([])
