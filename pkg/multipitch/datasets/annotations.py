"""Per-dataset note annotation adapters, all normalizing to ``NoteEvent`` seconds."""

import csv
import os
from typing import ClassVar, Dict, List

import pretty_midi
from pydantic import model_validator

from multipitch.backends import CsvDB
from multipitch.datasets.records import DatasetId, TrackRecord
from multipitch.exceptions import NotFoundError, ValidationError
from multipitch.interfaces import TableModel
from multipitch.logger_utils import get_logger

logger = get_logger("datasets.annotations")

MUSICNET_LABEL_RATE = 44100
MIDI_SUFFIXES = (".mid", ".midi")


class NoteEvent(TableModel):
    table_name: ClassVar[str] = "Notes"

    onset: float
    offset: float
    pitch: int

    @classmethod
    def get_field_map(cls) -> Dict[str, str]:
        return {"onset": "onset_sec", "offset": "offset_sec", "pitch": "midi_pitch"}

    @model_validator(mode="after")
    def check_note(self):
        if not self.offset > self.onset:
            raise ValidationError(f"Note offset {self.offset} not after onset {self.onset}")
        if not 0 <= self.pitch <= 127:
            raise ValidationError(f"MIDI pitch {self.pitch} outside 0-127")
        return self


def _read_dicts(path: str, delimiter: str) -> List[Dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f, delimiter=delimiter))


def _valid_notes(raw, source: str) -> List[NoteEvent]:
    notes = []
    for onset, offset, pitch in raw:
        if offset <= onset:
            logger.warning(f"{source}: skipping zero-length note at {onset:.3f}s")
            continue
        notes.append(NoteEvent(onset=onset, offset=offset, pitch=int(pitch)))
    return notes


def read_musicnet_csv(path: str) -> List[NoteEvent]:
    """MusicNet labels: comma-separated, times in samples at 44.1 kHz."""
    rows = _read_dicts(path, ",")
    raw = [
        (
            int(row["start_time"]) / MUSICNET_LABEL_RATE,
            int(row["end_time"]) / MUSICNET_LABEL_RATE,
            int(row["note"]),
        )
        for row in rows
    ]
    return _valid_notes(raw, path)


def read_swd_csv(path: str) -> List[NoteEvent]:
    """SWD note tables: semicolon-separated, times in seconds."""
    rows = _read_dicts(path, ";")
    raw = [(float(row["start"]), float(row["end"]), int(float(row["pitch"]))) for row in rows]
    return _valid_notes(raw, path)


def read_midi(path: str) -> List[NoteEvent]:
    midi = pretty_midi.PrettyMIDI(path)
    raw = [
        (note.start, note.end, note.pitch)
        for instrument in midi.instruments
        if not instrument.is_drum
        for note in instrument.notes
    ]
    return _valid_notes(raw, path)


def read_note_table(path: str) -> List[NoteEvent]:
    """The normalized ``onset_sec;offset_sec;midi_pitch`` format."""
    return CsvDB(path, strict=True).get_all(NoteEvent)


def write_note_table(path: str, notes: List[NoteEvent]) -> None:
    db = CsvDB(path)
    if notes:
        db.replace_all(notes)
    else:
        db.create_table(NoteEvent)


def _read_generic(path: str) -> List[NoteEvent]:
    if path.lower().endswith(MIDI_SUFFIXES):
        return read_midi(path)
    return read_note_table(path)


def load_notes(record: TrackRecord) -> List[NoteEvent]:
    """Notes of a track, merging per-stem lists by union when needed."""
    paths = [record.annotation_path] if record.annotation_path else record.stem_annotation_paths
    if not paths:
        raise NotFoundError(f"Track {record.track_id} has no annotation")
    missing = [p for p in paths if not os.path.exists(p)]
    if missing:
        raise NotFoundError(f"Track {record.track_id}: missing annotation file(s) {missing}")

    if record.annotation_path and not record.annotation_path.lower().endswith(MIDI_SUFFIXES):
        if record.dataset_id == DatasetId.MUN:
            return read_musicnet_csv(record.annotation_path)
        if record.dataset_id == DatasetId.SWD:
            return read_swd_csv(record.annotation_path)

    notes = []
    for path in paths:
        notes.extend(_read_generic(path))
    notes.sort(key=lambda n: (n.onset, n.pitch))
    return notes
