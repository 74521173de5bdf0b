"""Published splits, built from the committed tables in ``splits/tables``."""

from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, Field

from multipitch.backends import CsvDB
from multipitch.datasets.records import DatasetId, TrackRecord, expand_partial_mixes
from multipitch.exceptions import NotFoundError, ValidationError
from multipitch.logger_utils import get_logger
from multipitch.splits.metadata import (
    WTC_TAG,
    CompositionRow,
    RangeRow,
    SongRow,
    VersionRow,
    enrich_musicnet,
    read_table,
)
from multipitch.splits.spec import (
    PARTITIONS,
    LeakageRule,
    SplitRow,
    SplitSpec,
    generate_neither_split,
)

logger = get_logger("splits")

MUN_3_SECONDS = 90.0

MUSICNET_SPLITS = ("MuN-3", "MuN-10", "MuN-10a", "MuN-10b", "MuN-10c", "MuN-10full")
SWD_SPLITS = ("SWD-version", "SWD-song", "SWD-neither")
SPLIT_NAMES = MUSICNET_SPLITS + SWD_SPLITS + ("mixed", "tagged")


class SplitOptions(BaseModel):
    """Configurable choices behind the published splits."""

    n_validation: int = Field(27, ge=0)
    validation_seed: int = 0
    # MusicNet's musicnet_metadata.csv; falls back to MULTIPITCH_MUSICNET_METADATA
    musicnet_metadata: Optional[str] = None
    swd_test_versions: Optional[List[str]] = None
    swd_val_versions: Optional[List[str]] = None
    swd_train_songs: Optional[List[int]] = None
    swd_val_songs: Optional[List[int]] = None
    swd_test_songs: Optional[List[int]] = None


def _require(ids: Set[str], available: Set[str], name: str) -> None:
    missing = sorted(ids - available)
    if missing:
        raise NotFoundError(f"Split {name} needs tracks missing from the manifest: {missing}")


def _pick_validation(candidates: Set[str], options: SplitOptions) -> Set[str]:
    ordered = sorted(candidates)
    count = min(options.n_validation, len(ordered))
    if count < options.n_validation:
        logger.warning(f"Only {count} track(s) available for validation, wanted {options.n_validation}")
    rng = np.random.default_rng(options.validation_seed)
    return {ordered[i] for i in rng.choice(len(ordered), size=count, replace=False)}


def _musicnet_split(name: str, manifest: List[TrackRecord], options: SplitOptions) -> SplitSpec:
    records = [
        r for r in enrich_musicnet(manifest, options.musicnet_metadata) if r.dataset_id == DatasetId.MUN
    ]
    available = {r.track_id for r in records}

    if name == "MuN-10full":
        test = set()
        for row in read_table("musicnet_full_ranges.csv", RangeRow):
            test |= {str(i) for i in range(row.first_id, row.last_id + 1)}
        _require(test, available, name)
        unlabelled = sorted(r.track_id for r in records if not r.cycle_id)
        if unlabelled:
            raise ValidationError(
                f"Split {name} needs the cycle of every MusicNet track, {len(unlabelled)} have none "
                f"(first: {unlabelled[:5]}); configure the MusicNet metadata file"
            )
        by_id = {r.track_id: r for r in records}
        held_cycles = {by_id[t].cycle_id for t in test if by_id[t].cycle_id}
        # whole test cycles leave training, including the unused WTC tracks
        excluded = {
            r.track_id
            for r in records
            if r.cycle_id in held_cycles or WTC_TAG in r.split_tags
        }
        constraints = (LeakageRule.DISJOINT, LeakageRule.CYCLE)
        provenance = "MusicNet: all movements of the ten test cycles; WTC limited to 2302-2305"
    else:
        test = {row.track_id for row in read_table("musicnet_test_sets.csv", SplitRow, {"name": name})}
        _require(test, available, name)
        excluded = set(test)
        constraints = (LeakageRule.DISJOINT,)
        provenance = f"MusicNet test set {name}"

    remaining = available - excluded
    val = _pick_validation(remaining, options)
    return SplitSpec(
        name=name,
        train=frozenset(remaining - val),
        val=frozenset(val),
        test=frozenset(test),
        constraints=constraints,
        provenance=provenance,
        excerpt_seconds=MUN_3_SECONDS if name == "MuN-3" else None,
    )


def _song_number(record: TrackRecord) -> int:
    try:
        return int(record.movement_label)
    except ValueError as e:
        raise ValidationError(
            f"SWD track {record.track_id} needs a numeric movement_label (song), got '{record.movement_label}'"
        ) from e


def _swd_version_split(records: List[TrackRecord], options: SplitOptions) -> SplitSpec:
    table = {row.version_id: row.partition for row in read_table("swd_versions.csv", VersionRow)}
    versions = sorted({r.version_id for r in records})
    if options.swd_test_versions is not None or options.swd_val_versions is not None:
        test_versions = set(options.swd_test_versions or versions[:2])
        val_versions = set(options.swd_val_versions or versions[2:4])
        table = {
            v: "test" if v in test_versions else "val" if v in val_versions else "train"
            for v in versions
        }
    unknown = sorted(set(versions) - set(table))
    if unknown:
        raise NotFoundError(f"SWD versions without a partition: {unknown}")
    parts = {p: frozenset(r.track_id for r in records if table[r.version_id] == p) for p in PARTITIONS}
    return SplitSpec(
        name="SWD-version",
        constraints=(LeakageRule.DISJOINT, LeakageRule.VERSION),
        provenance="SWD: two versions test, two validation, rest training",
        **parts,
    )


def _swd_song_split(records: List[TrackRecord], options: SplitOptions) -> SplitSpec:
    table = {row.song: row.partition for row in read_table("swd_songs.csv", SongRow)}
    for partition, songs in (
        ("train", options.swd_train_songs),
        ("val", options.swd_val_songs),
        ("test", options.swd_test_songs),
    ):
        for song in songs or []:
            table[song] = partition
    parts = {
        p: frozenset(r.track_id for r in records if table.get(_song_number(r)) == p)
        for p in PARTITIONS
    }
    return SplitSpec(
        name="SWD-song",
        constraints=(LeakageRule.DISJOINT, LeakageRule.SONG),
        provenance="SWD: songs 1-13 training, 14-16 validation, 17-24 test, all versions",
        **parts,
    )


def _swd_split(name: str, manifest: List[TrackRecord], options: SplitOptions) -> SplitSpec:
    records = [r for r in manifest if r.dataset_id == DatasetId.SWD]
    if not records:
        raise NotFoundError(f"Split {name} needs SWD tracks, none in the manifest")
    if name == "SWD-version":
        return _swd_version_split(records, options)
    if name == "SWD-song":
        return _swd_song_split(records, options)
    return generate_neither_split(
        _swd_version_split(records, options), _swd_song_split(records, options)
    )


def _units(records: List[TrackRecord], unit: str) -> Dict[str, List[str]]:
    groups: Dict[str, List[str]] = {}
    for record in records:
        key = (record.cycle_id or record.track_id) if unit == "cycle" else record.track_id
        groups.setdefault(key, []).append(record.track_id)
    return groups


def _mixed_split(manifest: List[TrackRecord], options: SplitOptions) -> SplitSpec:
    manifest = expand_partial_mixes(manifest)
    parts: Dict[str, Set[str]] = {"train": set(), "val": set(), "test": set()}

    for row in read_table("mixed_composition.csv", CompositionRow):
        records = [r for r in manifest if r.dataset_id == row.dataset_id]
        if not records:
            raise NotFoundError(f"Split mixed needs {row.dataset_id.value} tracks, none in the manifest")

        if row.source in SPLIT_NAMES:
            sub = get_split(row.source, records, options)
            for p in parts:
                parts[p] |= sub.partition(p)
            continue

        if row.source == "test-only":
            parts["test"] |= {r.track_id for r in records}
            continue

        groups = _units(records, row.unit)
        keys = sorted(groups)
        n_test, n_val = row.n_test or 0, row.n_val or 0
        if len(keys) < n_test + n_val + 1:
            raise ValidationError(
                f"{row.dataset_id.value} has {len(keys)} {row.unit}(s), needs at least {n_test + n_val + 1}"
            )
        for index, key in enumerate(keys):
            partition = "test" if index < n_test else "val" if index < n_test + n_val else "train"
            parts[partition] |= set(groups[key])
        if row.n_train is not None and len(keys) - n_test - n_val != row.n_train:
            logger.warning(
                f"{row.dataset_id.value}: {len(keys) - n_test - n_val} training {row.unit}(s), table lists {row.n_train}"
            )

    return SplitSpec(
        name="mixed",
        train=frozenset(parts["train"]),
        val=frozenset(parts["val"]),
        test=frozenset(parts["test"]),
        constraints=(LeakageRule.DISJOINT,),
        provenance="mixed: MuN-10a, SWD-neither, Tri test-only, B10/PhA/CSD reconstruction",
    )


def _tagged_split(manifest: List[TrackRecord]) -> SplitSpec:
    parts = {
        p: frozenset(r.track_id for r in manifest if p in r.split_tags)
        for p in PARTITIONS
    }
    if not parts["train"] or not parts["test"]:
        raise ValidationError("Split tagged needs tracks tagged 'train' and 'test'")
    return SplitSpec(name="tagged", provenance="split_tags of the manifest", **parts)


def get_split(
    name: str, manifest: Sequence[TrackRecord], options: Optional[SplitOptions] = None
) -> SplitSpec:
    options = options or SplitOptions()
    manifest = list(manifest)
    if name in MUSICNET_SPLITS:
        spec = _musicnet_split(name, manifest, options)
    elif name in SWD_SPLITS:
        spec = _swd_split(name, manifest, options)
    elif name == "mixed":
        spec = _mixed_split(manifest, options)
    elif name == "tagged":
        spec = _tagged_split(manifest)
    else:
        raise NotFoundError(f"Unknown split '{name}', expected one of {list(SPLIT_NAMES)}")

    logger.info(
        f"Split {name}: {len(spec.train)} train / {len(spec.val)} val / {len(spec.test)} test"
    )
    return spec


def write_split(path: str, spec: SplitSpec) -> None:
    CsvDB(path).replace_all(spec.rows())


def read_split(path: str, name: str) -> SplitSpec:
    rows = CsvDB(path, strict=True).get_all(SplitRow, {"name": name})
    if not rows:
        raise NotFoundError(f"No split '{name}' in {path}")
    parts: Dict[str, Set[str]] = {"train": set(), "val": set(), "test": set()}
    for row in rows:
        parts[row.partition].add(row.track_id)
    return SplitSpec(name=name, **{p: frozenset(ids) for p, ids in parts.items()})


def manifest_for(spec: SplitSpec, manifest: Sequence[TrackRecord]) -> List[TrackRecord]:
    """Records a split refers to, with derived partial mixes and MuN metadata added."""
    records = enrich_musicnet(expand_partial_mixes(manifest))
    return [r for r in records if r.track_id in spec.track_ids]


def partition_records(
    spec: SplitSpec, manifest: Sequence[TrackRecord]
) -> Tuple[List[TrackRecord], List[TrackRecord], List[TrackRecord]]:
    records = manifest_for(spec, manifest)
    return tuple(
        [r for r in records if r.track_id in spec.partition(p)] for p in PARTITIONS
    )
