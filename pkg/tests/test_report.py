import pytest

from multipitch.evaluation import (
    EvalReport,
    TrackMetrics,
    read_eval,
    scatter_points,
    variance_report,
    write_eval,
)
from multipitch.exceptions import ConflictError, NotFoundError, ValidationError


def _track(track_id, ap, f=50.0):
    return TrackMetrics(
        track_id=track_id, precision=f, recall=f, f_measure=f, average_precision=ap, accuracy=f / 2, n_frames=100
    )


def _run(seed, aps, **overrides):
    run = dict(
        run_id=f"run-{seed}", model="CNN:M", family="CNN", size="M", params=1813293, split="MuN-10", seed=seed
    )
    run.update(overrides)
    tracks = [_track(f"t{i}", ap) for i, ap in enumerate(aps)]
    return EvalReport.build(tracks, **run)


def test_variance_spread():
    summary = variance_report([_run(0, [80.0, 60.0]), _run(1, [80.4, 60.0])])
    ap = summary.macro_stat("average_precision")
    assert ap.n_runs == 2
    assert ap.spread == pytest.approx(0.2)
    assert ap.values == pytest.approx([70.0, 70.2])

    t0 = [s for s in summary.per_track if s.track_id == "t0" and s.metric == "average_precision"]
    assert t0[0].spread == pytest.approx(0.4)
    assert (t0[0].min, t0[0].max) == (80.0, 80.4)
    assert summary.macro_stat("f_measure").spread == 0.0
    with pytest.raises(NotFoundError):
        summary.macro_stat("loudness")


def test_variance_needs_two_compatible_runs():
    with pytest.raises(ValidationError):
        variance_report([_run(0, [80.0])])
    with pytest.raises(ConflictError, match="params"):
        variance_report([_run(0, [80.0]), _run(1, [80.0], params=5)])
    with pytest.raises(ConflictError, match="split"):
        variance_report([_run(0, [80.0]), _run(1, [80.0], split="MuN-3")])
    with pytest.raises(ConflictError, match="different tracks"):
        variance_report([_run(0, [80.0]), _run(1, [80.0, 70.0])])


def test_undefined_ap_is_noted_and_skipped():
    report = _run(0, [80.0, None])
    assert report.macro.average_precision == 80.0
    assert report.macro.n_ap_excluded == 1
    assert any("t1" in note for note in report.notes)

    summary = variance_report([report, _run(1, [70.0, None])])
    assert not [s for s in summary.per_track if s.track_id == "t1" and s.metric == "average_precision"]
    assert [s for s in summary.per_track if s.track_id == "t1" and s.metric == "f_measure"]


def test_eval_table_round_trip(tmp_path):
    report = _run(3, [80.5, None, 12.25])
    path = tmp_path / "eval.csv"
    write_eval(str(path), report)
    header = path.read_text().splitlines()[0].split(";")
    assert header[:3] == ["run_id", "model", "family"]
    assert "ap_defined" in header

    loaded = read_eval(str(path))
    assert loaded.tracks == report.tracks
    assert loaded.macro == report.macro
    assert loaded.run_key() == report.run_key()
    assert loaded.seed == 3

    with pytest.raises(NotFoundError):
        read_eval(str(tmp_path / "missing.csv"))


def test_scatter_has_one_point_per_run():
    runs = [_run(0, [80.0]), _run(1, [70.0]), _run(0, [50.0], model="SAUnet:L", family="SAUnet", params=7982715)]
    points = scatter_points(runs)
    assert [(p.params, p.average_precision) for p in points] == [
        (1813293, 80.0),
        (1813293, 70.0),
        (7982715, 50.0),
    ]
