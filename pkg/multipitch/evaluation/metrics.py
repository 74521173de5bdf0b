"""Frame-level multi-pitch metrics, in percent.

Per track every measure is a micro average over all frame x pitch cells;
``aggregate`` then takes the unweighted mean over tracks.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel
from sklearn.metrics import average_precision_score

from multipitch.exceptions import ShapeError, ValidationError

THRESHOLD = 0.4


def _check(pred: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ShapeError(f"Prediction {pred.shape} and target {target.shape} differ")
    return pred, target.astype(bool)


def confusion_counts(pred, target, threshold: float = THRESHOLD) -> Tuple[int, int, int]:
    """(TP, FP, FN) of ``pred >= threshold`` against the binary target."""
    pred, target = _check(pred, target)
    active = pred >= threshold
    tp = int(np.count_nonzero(active & target))
    fp = int(np.count_nonzero(active & ~target))
    fn = int(np.count_nonzero(~active & target))
    return tp, fp, fn


def _ratio(tp: int, denominator: int, other_empty: bool) -> float:
    if denominator == 0:
        return 100.0 if other_empty else 0.0
    return 100.0 * tp / denominator


def frame_metrics(pred, target, threshold: float = THRESHOLD) -> Tuple[float, float, float]:
    """Precision, recall and F-measure.

    Empty denominators: precision with nothing predicted is 100 when the
    target is empty as well, else 0; recall mirrors that.
    """
    tp, fp, fn = confusion_counts(pred, target, threshold)
    precision = _ratio(tp, tp + fp, tp + fn == 0)
    recall = _ratio(tp, tp + fn, tp + fp == 0)
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def average_precision(pred, target) -> Optional[float]:
    """Area under the step-interpolated precision-recall curve; None without positives."""
    pred, target = _check(pred, target)
    if not target.any():
        return None
    return 100.0 * float(average_precision_score(target.ravel(), pred.ravel()))


def accuracy_score(pred, target, threshold: float = THRESHOLD) -> float:
    """TP / (TP + FP + FN); 100 when all three are zero."""
    tp, fp, fn = confusion_counts(pred, target, threshold)
    if tp + fp + fn == 0:
        return 100.0
    return 100.0 * tp / (tp + fp + fn)


class TrackMetrics(BaseModel):
    track_id: str
    precision: float
    recall: float
    f_measure: float
    average_precision: Optional[float] = None
    accuracy: float
    n_frames: int = 0

    @property
    def ap_defined(self) -> bool:
        return self.average_precision is not None


class MacroMetrics(BaseModel):
    precision: float
    recall: float
    f_measure: float
    average_precision: Optional[float] = None
    accuracy: float
    n_tracks: int
    n_ap_excluded: int = 0


def track_metrics(track_id: str, pred, target, threshold: float = THRESHOLD) -> TrackMetrics:
    precision, recall, f_measure = frame_metrics(pred, target, threshold)
    return TrackMetrics(
        track_id=track_id,
        precision=precision,
        recall=recall,
        f_measure=f_measure,
        average_precision=average_precision(pred, target),
        accuracy=accuracy_score(pred, target, threshold),
        n_frames=int(np.shape(pred)[0]),
    )


def aggregate(reports: Sequence[TrackMetrics]) -> MacroMetrics:
    """Unweighted mean over tracks, whatever their length.

    Tracks whose AP is undefined (no active pitch) are left out of the AP
    mean only.
    """
    if not reports:
        raise ValidationError("Cannot aggregate an empty set of tracks")
    aps: List[float] = [r.average_precision for r in reports if r.average_precision is not None]
    return MacroMetrics(
        precision=float(np.mean([r.precision for r in reports])),
        recall=float(np.mean([r.recall for r in reports])),
        f_measure=float(np.mean([r.f_measure for r in reports])),
        average_precision=float(np.mean(aps)) if aps else None,
        accuracy=float(np.mean([r.accuracy for r in reports])),
        n_tracks=len(reports),
        n_ap_excluded=len(reports) - len(aps),
    )
