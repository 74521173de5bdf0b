from .metrics import (
    THRESHOLD,
    MacroMetrics,
    TrackMetrics,
    accuracy_score,
    aggregate,
    average_precision,
    confusion_counts,
    frame_metrics,
    track_metrics,
)
from .predict import TrackPrediction, predict_features, predict_track
from .report import (
    METRICS,
    EvalReport,
    EvalRow,
    MetricStats,
    ScatterPoint,
    VarianceSummary,
    check_compatible,
    evaluate_track,
    evaluate_tracks,
    read_eval,
    scatter_points,
    variance_report,
    write_eval,
)

__all__ = [
    "METRICS",
    "THRESHOLD",
    "EvalReport",
    "EvalRow",
    "MacroMetrics",
    "MetricStats",
    "ScatterPoint",
    "TrackMetrics",
    "TrackPrediction",
    "VarianceSummary",
    "accuracy_score",
    "aggregate",
    "average_precision",
    "check_compatible",
    "confusion_counts",
    "evaluate_track",
    "evaluate_tracks",
    "frame_metrics",
    "predict_features",
    "predict_track",
    "read_eval",
    "scatter_points",
    "track_metrics",
    "variance_report",
    "write_eval",
]
