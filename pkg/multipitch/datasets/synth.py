"""Synthetic corpus: random note sequences rendered as harmonic sinusoid mixtures."""

import os
from typing import List, Optional, Tuple

import numpy as np
import soundfile as sf

from multipitch.datasets.annotations import NoteEvent, write_note_table
from multipitch.datasets.records import DatasetId, TrackRecord, write_manifest
from multipitch.exceptions import ValidationError
from multipitch.logger_utils import get_logger
from multipitch.signal import SAMPLE_RATE

logger = get_logger("datasets.synth")

MIN_MIDI = 36
MAX_MIDI = 84
N_PARTIALS = 5
ATTACK = 0.01
RELEASE = 0.03
PEAK = 0.9


def _overlaps(notes: List[NoteEvent], onset: float, offset: float) -> List[NoteEvent]:
    return [n for n in notes if n.onset < offset and onset < n.offset]


def _max_overlap(notes: List[NoteEvent], onset: float, offset: float) -> int:
    """Largest number of ``notes`` sounding at once within [onset, offset)."""
    active = _overlaps(notes, onset, offset)
    probes = [onset] + [n.onset for n in active if n.onset > onset]
    return max(
        (sum(1 for n in active if n.onset <= t < n.offset) for t in probes), default=0
    )


def random_notes(
    rng: np.random.Generator,
    duration: float,
    max_polyphony: int = 6,
    density: float = 4.0,
    pitch_range: Tuple[int, int] = (MIN_MIDI, MAX_MIDI),
) -> List[NoteEvent]:
    """About ``density`` notes per second, never more than ``max_polyphony`` at once."""
    notes: List[NoteEvent] = []
    for _ in range(int(density * duration)):
        length = float(rng.uniform(0.15, 1.2))
        onset = float(rng.uniform(0.0, max(duration - length, 0.01)))
        offset = min(onset + length, duration)
        pitch = int(rng.integers(pitch_range[0], pitch_range[1] + 1))
        overlapping = _overlaps(notes, onset, offset)
        if any(n.pitch == pitch for n in overlapping):
            continue
        if _max_overlap(notes, onset, offset) + 1 > max_polyphony:
            continue
        notes.append(NoteEvent(onset=round(onset, 4), offset=round(offset, 4), pitch=pitch))
    notes.sort(key=lambda n: (n.onset, n.pitch))
    return notes


def render_notes(
    notes: List[NoteEvent], duration: float, rng: np.random.Generator, sr: int = SAMPLE_RATE
) -> np.ndarray:
    n_samples = int(round(duration * sr))
    audio = np.zeros(n_samples, dtype=np.float64)
    for note in notes:
        start = int(round(note.onset * sr))
        stop = min(int(round(note.offset * sr)), n_samples)
        if stop <= start:
            continue
        t = np.arange(stop - start) / sr
        f0 = 440.0 * 2.0 ** ((note.pitch - 69) / 12.0)
        tone = np.zeros_like(t)
        for k in range(1, N_PARTIALS + 1):
            if k * f0 >= sr / 2:
                break
            tone += np.sin(2 * np.pi * k * f0 * t + rng.uniform(0, 2 * np.pi)) / k
        envelope = np.exp(-t / float(rng.uniform(0.6, 2.0)))
        envelope *= np.clip(t / ATTACK, 0.0, 1.0)
        envelope *= np.clip((t[-1] - t) / RELEASE, 0.0, 1.0)
        audio[start:stop] += float(rng.uniform(0.3, 1.0)) * envelope * tone
    peak = np.max(np.abs(audio))
    if peak > 0:
        audio *= PEAK / peak
    return audio.astype(np.float32)


def synthesize_track(
    rng: np.random.Generator, duration: float = 10.0, max_polyphony: int = 6
) -> Tuple[np.ndarray, List[NoteEvent]]:
    notes = random_notes(rng, duration, max_polyphony)
    return render_notes(notes, duration, rng), notes


def synthesize_corpus(
    out_dir: str,
    n_tracks: int = 60,
    duration: float = 10.0,
    seed: int = 0,
    partition: Optional[Tuple[int, int, int]] = None,
    max_polyphony: int = 6,
) -> List[TrackRecord]:
    """Writes audio, note tables and ``manifest.csv``; returns the records.

    ``partition`` gives the train/val/test track counts (default 2/3, 1/6, 1/6),
    recorded as split tags for the ``tagged`` split.
    """
    if partition is None:
        n_val = n_test = n_tracks // 6
        partition = (n_tracks - n_val - n_test, n_val, n_test)
    if sum(partition) != n_tracks:
        raise ValidationError(f"Partition {partition} does not add up to {n_tracks} tracks")

    rng = np.random.default_rng(seed)
    os.makedirs(os.path.join(out_dir, "audio"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "notes"), exist_ok=True)

    tags = ["train"] * partition[0] + ["val"] * partition[1] + ["test"] * partition[2]
    records = []
    for index, tag in enumerate(tags):
        track_id = f"syn-{index:03d}"
        audio, notes = synthesize_track(rng, duration, max_polyphony)
        audio_path = os.path.join("audio", f"{track_id}.wav")
        notes_path = os.path.join("notes", f"{track_id}.csv")
        sf.write(os.path.join(out_dir, audio_path), audio, SAMPLE_RATE, subtype="FLOAT")
        write_note_table(os.path.join(out_dir, notes_path), notes)
        records.append(
            TrackRecord(
                track_id=track_id,
                dataset_id=DatasetId.SYN,
                audio_path=audio_path,
                annotation_path=notes_path,
                cycle_id=track_id,
                version_id="synthetic",
                movement_label=track_id,
                split_tags={tag},
            )
        )

    write_manifest(os.path.join(out_dir, "manifest.csv"), records)
    logger.info(f"Synthesized {n_tracks} track(s) into {out_dir}")
    root = os.path.abspath(out_dir)
    return [r.resolved(root) for r in records]
