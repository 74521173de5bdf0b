import os
from typing import List, NamedTuple, Optional

from pydantic import BaseModel

from multipitch.datasets.annotations import load_notes, write_note_table
from multipitch.datasets.patches import TrackFeatures
from multipitch.datasets.pianoroll import load_pianoroll, rasterize, save_pianoroll
from multipitch.datasets.records import TrackRecord, load_track_audio
from multipitch.exceptions import NotFoundError
from multipitch.logger_utils import get_logger
from multipitch.signal import compute_hcqt, estimate_tuning, load_hcqt, save_hcqt
from multipitch.signal.hcqt import DEFAULT_COMPRESSION

logger = get_logger("datasets.features")


class FeaturePaths(NamedTuple):
    hcqt: str
    roll: str
    notes: str


class ExtractResult(BaseModel):
    track_id: str
    written: bool
    n_frames: int = 0
    tuning: float = 0.0
    silent: bool = False
    dropped: int = 0


def feature_paths(cache_dir: str, record: TrackRecord) -> FeaturePaths:
    base = os.path.join(cache_dir, record.dataset_id.value)
    return FeaturePaths(
        hcqt=os.path.join(base, f"{record.track_id}.hcqt"),
        roll=os.path.join(base, f"{record.track_id}.roll"),
        notes=os.path.join(base, "notes", f"{record.track_id}.csv"),
    )


def source_paths(record: TrackRecord) -> List[str]:
    paths = [record.audio_path, record.annotation_path]
    paths += record.stem_audio_paths + record.stem_annotation_paths
    return [p for p in paths if p]


def is_up_to_date(record: TrackRecord, paths: FeaturePaths) -> bool:
    if not all(os.path.exists(p) for p in paths):
        return False
    sources = source_paths(record)
    if not all(os.path.exists(p) for p in sources):
        return False
    newest_source = max(os.path.getmtime(p) for p in sources)
    return min(os.path.getmtime(p) for p in paths) >= newest_source


def extract_track(
    record: TrackRecord,
    cache_dir: str,
    compression: float = DEFAULT_COMPRESSION,
    force: bool = False,
) -> ExtractResult:
    """HCQT, normalized notes and piano roll of one track, skipped when cached."""
    paths = feature_paths(cache_dir, record)
    if not force and is_up_to_date(record, paths):
        logger.debug(f"Track {record.track_id} is up to date")
        return ExtractResult(track_id=record.track_id, written=False)

    audio = load_track_audio(record)
    tuning = estimate_tuning(audio)
    hcqt = compute_hcqt(audio, tuning=tuning.cents, compression=compression)
    notes = load_notes(record)
    roll = rasterize(notes, hcqt.n_frames)

    os.makedirs(os.path.dirname(paths.notes), exist_ok=True)
    write_note_table(paths.notes, notes)
    save_pianoroll(paths.roll, roll)
    # HCQT last: its presence marks a complete cache entry
    save_hcqt(paths.hcqt, hcqt)

    logger.info(
        f"Extracted {record.track_id}: {hcqt.n_frames} frames, tuning {tuning.cents:+.1f} cents, "
        f"{roll.dropped} out-of-range note(s) dropped"
    )
    return ExtractResult(
        track_id=record.track_id,
        written=True,
        n_frames=hcqt.n_frames,
        tuning=tuning.cents,
        silent=tuning.silent,
        dropped=roll.dropped,
    )


def load_features(
    record: TrackRecord, cache_dir: str, excerpt_seconds: Optional[float] = None
) -> TrackFeatures:
    paths = feature_paths(cache_dir, record)
    if not (os.path.exists(paths.hcqt) and os.path.exists(paths.roll)):
        raise NotFoundError(
            f"No cached features for track {record.track_id} under {cache_dir}; run extract-features"
        )
    features = TrackFeatures(
        track_id=record.track_id, hcqt=load_hcqt(paths.hcqt), roll=load_pianoroll(paths.roll)
    )
    return features.excerpt(excerpt_seconds)
