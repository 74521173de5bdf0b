"""Loaders for the committed split and metadata tables."""

import os
from typing import Any, ClassVar, Dict, List, Optional, Sequence, Tuple, Type

from multipitch import settings
from multipitch.backends import CsvDB
from multipitch.datasets.records import DatasetId, TrackRecord
from multipitch.exceptions import NotFoundError
from multipitch.interfaces import TableModel
from multipitch.interfaces.base import M
from multipitch.logger_utils import get_logger

logger = get_logger("splits.metadata")

TABLE_DIR = os.path.join(os.path.dirname(__file__), "tables")
WTC_TAG = "WTKI"
WTC_CYCLE = "Bach WTC I"


class CycleRow(TableModel):
    table_name: ClassVar[str] = "MusicNetCycles"

    track_id: str
    composer: str
    cycle_id: str
    version_id: str
    movement_label: str = ""
    catalog: str = ""
    # lowest track ID recording the same movement, empty for the first recording
    duplicate_of: str = ""


class MusicNetMetadataRow(TableModel):
    """One row of the ``musicnet_metadata.csv`` published with MusicNet."""

    table_name: ClassVar[str] = "MusicNetMetadata"

    id: str
    composer: str
    composition: str
    movement: str = ""
    ensemble: str = ""
    source: str = ""
    transcriber: str = ""
    catalog_name: str = ""
    seconds: Optional[float] = None

    @property
    def cycle_id(self) -> str:
        return f"{self.composer} {self.catalog_name or self.composition}"

    def work_key(self) -> Tuple[str, str, str]:
        return (self.composer, self.catalog_name or self.composition, " ".join(self.movement.lower().split()))


class RangeRow(TableModel):
    table_name: ClassVar[str] = "MusicNetRanges"

    name: str
    cycle_id: str
    first_id: int
    last_id: int


class VersionRow(TableModel):
    table_name: ClassVar[str] = "SwdVersions"

    version_id: str
    partition: str


class SongRow(TableModel):
    table_name: ClassVar[str] = "SwdSongs"

    song: int
    partition: str


class CompositionRow(TableModel):
    table_name: ClassVar[str] = "MixedComposition"

    dataset_id: DatasetId
    source: str
    unit: str
    n_train: Optional[int] = None
    n_val: Optional[int] = None
    n_test: Optional[int] = None
    note: str = ""


def read_table(name: str, model: Type[M], filters: Optional[Dict[str, Any]] = None) -> List[M]:
    return CsvDB(os.path.join(TABLE_DIR, name), strict=True).get_all(model, filters)


def musicnet_cycles() -> Dict[str, CycleRow]:
    return {row.track_id: row for row in read_table("musicnet_cycles.csv", CycleRow)}


def read_musicnet_metadata(path: str) -> Dict[str, CycleRow]:
    """Cycle, version, movement and duplicate of every track in MusicNet's metadata file.

    Tracks recording the same movement of the same work are versions of each
    other; all but the lowest ID point to it through ``duplicate_of``.
    """
    db = CsvDB(path, strict=True, delimiter=",")
    if not db.exists():
        raise NotFoundError(f"MusicNet metadata {path} does not exist")
    rows = sorted(db.get_all(MusicNetMetadataRow), key=lambda r: int(r.id) if r.id.isdigit() else r.id)

    first_of: Dict[Tuple[str, str, str], str] = {}
    table = {}
    for row in rows:
        original = first_of.setdefault(row.work_key(), row.id)
        table[row.id] = CycleRow(
            track_id=row.id,
            composer=row.composer,
            cycle_id=row.cycle_id,
            version_id=f"{row.cycle_id}/{row.source or 'MuN'}",
            movement_label=row.movement,
            catalog=row.catalog_name,
            duplicate_of="" if original == row.id else original,
        )

    n_wtc = sum(r.catalog == WTC_TAG for r in table.values())
    n_duplicates = sum(bool(r.duplicate_of) for r in table.values())
    logger.info(
        f"MusicNet metadata {path}: {len(table)} track(s), {n_wtc} {WTC_TAG}, {n_duplicates} version duplicate(s)"
    )
    return table


def enrich_musicnet(
    manifest: Sequence[TrackRecord], metadata_path: Optional[str] = None
) -> List[TrackRecord]:
    """Fills missing cycle/version/movement/duplicate fields of MuN tracks.

    Rows come from MusicNet's metadata file when one is configured, else from
    the committed table of the test cycles. Fields set in the manifest win.
    """
    cycles = musicnet_cycles()
    metadata_path = metadata_path or settings.musicnet_metadata_path()
    if metadata_path:
        cycles.update(read_musicnet_metadata(metadata_path))

    enriched = []
    for record in manifest:
        row = cycles.get(record.track_id)
        if record.dataset_id == DatasetId.MUN and row is not None:
            update = {
                "cycle_id": record.cycle_id or row.cycle_id,
                "version_id": record.version_id or row.version_id,
                "movement_label": record.movement_label or row.movement_label,
                "duplicate_of": record.duplicate_of or row.duplicate_of,
            }
            if row.catalog == WTC_TAG or update["cycle_id"] == WTC_CYCLE:
                update["split_tags"] = record.split_tags | {WTC_TAG}
            record = record.model_copy(update=update)
        enriched.append(record)
    return enriched
