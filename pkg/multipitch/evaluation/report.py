from typing import ClassVar, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from multipitch.backends import CsvDB
from multipitch.datasets import TrackFeatures
from multipitch.evaluation.metrics import (
    THRESHOLD,
    MacroMetrics,
    TrackMetrics,
    aggregate,
    track_metrics,
)
from multipitch.evaluation.predict import predict_features
from multipitch.exceptions import ConflictError, NotFoundError, ValidationError
from multipitch.interfaces import TableModel
from multipitch.logger_utils import get_logger
from multipitch.models import MultipitchNet

logger = get_logger("evaluation")

METRICS = ("precision", "recall", "f_measure", "average_precision", "accuracy")
# run attributes that must agree before runs are compared
RUN_KEYS = ("model", "family", "params", "split", "threshold")


class EvalRow(TableModel):
    table_name: ClassVar[str] = "Eval"

    run_id: str
    model: str
    family: str
    size: str = ""
    params: int
    split: str
    seed: int
    track_id: str
    precision: float
    recall: float
    f_measure: float
    average_precision: Optional[float] = None
    accuracy: float
    ap_defined: bool
    threshold: float = THRESHOLD
    n_frames: int = 0


class EvalReport(BaseModel):
    """Per-track metrics of one trained run on one split."""

    run_id: str
    model: str
    family: str
    size: str = ""
    params: int
    split: str
    seed: int
    threshold: float = THRESHOLD
    tracks: List[TrackMetrics]
    macro: MacroMetrics
    notes: List[str] = Field(default_factory=list)

    @classmethod
    def build(cls, tracks: Sequence[TrackMetrics], **run) -> "EvalReport":
        notes = [
            f"AP undefined for {t.track_id} (no active pitch); excluded from the AP mean"
            for t in tracks
            if not t.ap_defined
        ]
        return cls(tracks=list(tracks), macro=aggregate(tracks), notes=notes, **run)

    def rows(self) -> List[EvalRow]:
        run = self.model_dump(include=set(EvalRow.model_fields) - set(TrackMetrics.model_fields))
        return [
            EvalRow(**run, **t.model_dump(), ap_defined=t.ap_defined) for t in self.tracks
        ]

    @classmethod
    def from_rows(cls, rows: Sequence[EvalRow]) -> "EvalReport":
        if not rows:
            raise ValidationError("An evaluation report needs at least one row")
        first = rows[0]
        run = {k: getattr(first, k) for k in ("run_id", "model", "family", "size", "params", "split", "seed", "threshold")}
        tracks = [
            TrackMetrics(**row.model_dump(include=set(TrackMetrics.model_fields)))
            for row in rows
        ]
        return cls.build(tracks, **run)

    def run_key(self) -> Dict[str, object]:
        return {k: getattr(self, k) for k in RUN_KEYS}


def evaluate_track(
    model: MultipitchNet, track: TrackFeatures, threshold: float = THRESHOLD, **kwargs
) -> TrackMetrics:
    prediction = predict_features(model, track, **kwargs)
    return track_metrics(track.track_id, prediction.activations, track.roll.activity, threshold)


def evaluate_tracks(
    model: MultipitchNet,
    tracks: Sequence[TrackFeatures],
    /,
    threshold: float = THRESHOLD,
    device: str = "cpu",
    **run,
) -> EvalReport:
    results = []
    for track in tracks:
        metrics = evaluate_track(model, track, threshold, device=device)
        ap = "n/a" if metrics.average_precision is None else f"{metrics.average_precision:.1f}"
        logger.info(f"{track.track_id}: F {metrics.f_measure:.1f}, AP {ap}")
        results.append(metrics)
    return EvalReport.build(results, threshold=threshold, **run)


def write_eval(path: str, report: EvalReport) -> None:
    CsvDB(path).replace_all(report.rows())


def read_eval(path: str) -> EvalReport:
    db = CsvDB(path, strict=True)
    if not db.exists():
        raise NotFoundError(f"No evaluation table at {path}")
    return EvalReport.from_rows(db.get_all(EvalRow))


class MetricStats(TableModel):
    table_name: ClassVar[str] = "Variance"
    list_fields: ClassVar = ("values",)

    track_id: str = ""  # empty for the macro row
    metric: str
    n_runs: int
    min: float
    max: float
    mean: float
    spread: float
    values: List[float] = Field(default_factory=list)


class ScatterPoint(TableModel):
    table_name: ClassVar[str] = "Scatter"

    model: str
    family: str
    size: str = ""
    params: int
    seed: int
    run_id: str
    average_precision: Optional[float] = None


class VarianceSummary(BaseModel):
    macro: List[MetricStats]
    per_track: List[MetricStats]
    scatter: List[ScatterPoint]

    def macro_stat(self, metric: str) -> MetricStats:
        for stats in self.macro:
            if stats.metric == metric:
                return stats
        raise NotFoundError(f"No macro statistics for '{metric}'")


def _stats(values: List[float], metric: str, track_id: str = "") -> Optional[MetricStats]:
    if not values:
        return None
    array = np.asarray(values, dtype=np.float64)
    return MetricStats(
        track_id=track_id,
        metric=metric,
        n_runs=len(values),
        min=float(array.min()),
        max=float(array.max()),
        mean=float(array.mean()),
        spread=float(array.max() - array.min()),
        values=list(values),
    )


def check_compatible(runs: Sequence[EvalReport]) -> None:
    reference = runs[0].run_key()
    for run in runs[1:]:
        for key, value in run.run_key().items():
            if value != reference[key]:
                raise ConflictError(
                    f"Run {run.run_id} has {key}={value!r}, run {runs[0].run_id} has {reference[key]!r}"
                )


def scatter_points(runs: Sequence[EvalReport]) -> List[ScatterPoint]:
    """One (parameter count, macro AP) point per run."""
    return [
        ScatterPoint(
            model=run.model,
            family=run.family,
            size=run.size,
            params=run.params,
            seed=run.seed,
            run_id=run.run_id,
            average_precision=run.macro.average_precision,
        )
        for run in runs
    ]


def variance_report(runs: Sequence[EvalReport]) -> VarianceSummary:
    """Spread of every metric across re-runs of one configuration, macro and per track."""
    if len(runs) < 2:
        raise ValidationError(f"variance_report needs at least 2 runs, got {len(runs)}")
    check_compatible(runs)
    track_ids = [t.track_id for t in runs[0].tracks]
    for run in runs[1:]:
        if sorted(t.track_id for t in run.tracks) != sorted(track_ids):
            raise ConflictError(f"Run {run.run_id} was evaluated on different tracks than {runs[0].run_id}")

    macro = []
    for metric in METRICS:
        values = [getattr(r.macro, metric) for r in runs]
        stats = _stats([v for v in values if v is not None], metric)
        if stats is not None:
            macro.append(stats)

    per_track = []
    for track_id in track_ids:
        by_run = [next(t for t in r.tracks if t.track_id == track_id) for r in runs]
        for metric in METRICS:
            values = [getattr(t, metric) for t in by_run]
            stats = _stats([v for v in values if v is not None], metric, track_id)
            if stats is not None:
                per_track.append(stats)

    summary = VarianceSummary(macro=macro, per_track=per_track, scatter=scatter_points(runs))
    ap = next((s for s in macro if s.metric == "average_precision"), None)
    if ap is not None:
        logger.info(f"{runs[0].model}: macro AP over {len(runs)} runs spans {ap.min:.1f}-{ap.max:.1f}")
    return summary
