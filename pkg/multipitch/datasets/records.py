import os
from collections import Counter
from enum import Enum
from typing import ClassVar, Dict, FrozenSet, Iterable, List, Tuple

import numpy as np
from pydantic import model_validator

from multipitch.backends import CsvDB
from multipitch.exceptions import ValidationError
from multipitch.interfaces import TableModel
from multipitch.logger_utils import get_logger
from multipitch.signal import AudioTrack, load_audio

logger = get_logger("datasets.records")

PARTIAL_MIX_TAG = "partial-mix"
PARTIAL_MIX_PARTS = 4


class DatasetId(str, Enum):
    MUN = "MuN"
    SWD = "SWD"
    TRI = "Tri"
    B10 = "B10"
    PHA = "PhA"
    CSD = "CSD"
    SYN = "SYN"


class TrackRecord(TableModel):
    table_name: ClassVar[str] = "Manifest"
    list_fields: ClassVar[Tuple[str, ...]] = (
        "split_tags",
        "stem_audio_paths",
        "stem_annotation_paths",
        "part_labels",
    )

    track_id: str
    dataset_id: DatasetId
    audio_path: str = ""
    annotation_path: str = ""
    cycle_id: str = ""
    version_id: str = ""
    movement_label: str = ""
    split_tags: FrozenSet[str] = frozenset()
    stem_audio_paths: List[str] = []
    stem_annotation_paths: List[str] = []
    part_labels: List[str] = []
    derived_from: str = ""
    # another recording of the same movement, by track ID
    duplicate_of: str = ""

    @model_validator(mode="after")
    def check_sources(self):
        if not self.audio_path and not self.stem_audio_paths:
            raise ValidationError(f"Track {self.track_id} has neither audio nor stems")
        if self.stem_audio_paths and self.part_labels and len(self.part_labels) != len(
            self.stem_audio_paths
        ):
            raise ValidationError(
                f"Track {self.track_id}: {len(self.part_labels)} part labels for "
                f"{len(self.stem_audio_paths)} stems"
            )
        return self

    @property
    def key(self) -> Tuple[str, str, str]:
        return (self.cycle_id, self.version_id, self.movement_label)

    def resolved(self, root: str) -> "TrackRecord":
        """Copy with every relative path anchored at ``root``."""

        def anchor(path: str) -> str:
            if not path or os.path.isabs(path):
                return path
            return os.path.normpath(os.path.join(root, path))

        return self.model_copy(
            update={
                "audio_path": anchor(self.audio_path),
                "annotation_path": anchor(self.annotation_path),
                "stem_audio_paths": [anchor(p) for p in self.stem_audio_paths],
                "stem_annotation_paths": [anchor(p) for p in self.stem_annotation_paths],
            }
        )


def validate_manifest(records: Iterable[TrackRecord]) -> None:
    records = list(records)
    duplicate_ids = [k for k, n in Counter(r.track_id for r in records).items() if n > 1]
    if duplicate_ids:
        raise ValidationError(f"Duplicate track IDs in manifest: {sorted(duplicate_ids)}")

    keys = Counter(
        (r.dataset_id, r.key) for r in records if all(r.key)
    )
    clashes = [k for k, n in keys.items() if n > 1]
    if clashes:
        raise ValidationError(
            "(cycle_id, version_id, movement_label) not unique within dataset: "
            + ", ".join(f"{d.value}:{k}" for d, k in clashes)
        )


def read_manifest(path) -> List[TrackRecord]:
    """Reads and validates a manifest; relative paths resolve against its folder."""
    db = CsvDB(path, strict=True)
    if not db.exists():
        raise ValidationError(f"Manifest {path} does not exist")
    root = os.path.dirname(os.path.abspath(path))
    records = [r.resolved(root) for r in db.get_all(TrackRecord)]
    validate_manifest(records)
    logger.info(f"Loaded {len(records)} track(s) from {path}")
    return records


def write_manifest(path, records: List[TrackRecord]) -> None:
    validate_manifest(records)
    CsvDB(path).replace_all(records)


def index_by_id(records: Iterable[TrackRecord]) -> Dict[str, TrackRecord]:
    return {r.track_id: r for r in records}


def expand_partial_mixes(records: Iterable[TrackRecord]) -> List[TrackRecord]:
    """Adds the three-part mixes of every four-part CSD work.

    Each derived record leaves out one part; its audio is the sum of the
    remaining stems and its notes the union of their annotations.
    """
    expanded = []
    for record in records:
        expanded.append(record)
        if (
            record.dataset_id != DatasetId.CSD
            or record.derived_from
            or len(record.stem_audio_paths) != PARTIAL_MIX_PARTS
        ):
            continue
        labels = record.part_labels or [str(i) for i in range(PARTIAL_MIX_PARTS)]
        for left_out, label in enumerate(labels):
            keep = [i for i in range(PARTIAL_MIX_PARTS) if i != left_out]
            expanded.append(
                TrackRecord(
                    track_id=f"{record.track_id}-no-{label}",
                    dataset_id=record.dataset_id,
                    cycle_id=record.cycle_id,
                    version_id=record.version_id,
                    movement_label=f"{record.movement_label}/no-{label}",
                    split_tags=record.split_tags | {PARTIAL_MIX_TAG},
                    stem_audio_paths=[record.stem_audio_paths[i] for i in keep],
                    stem_annotation_paths=[
                        record.stem_annotation_paths[i]
                        for i in keep
                        if i < len(record.stem_annotation_paths)
                    ],
                    part_labels=[labels[i] for i in keep],
                    derived_from=record.track_id,
                )
            )
    return expanded


def load_track_audio(record: TrackRecord) -> AudioTrack:
    """The track's mix, or the sum of its stems when no mix file is given."""
    if record.audio_path:
        return load_audio(record.audio_path)

    stems = [load_audio(path).samples for path in record.stem_audio_paths]
    n = min(s.shape[0] for s in stems)
    mix = np.sum([s[:n] for s in stems], axis=0)
    return AudioTrack(samples=mix.astype(np.float32))
