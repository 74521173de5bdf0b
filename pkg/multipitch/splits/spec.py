from enum import Enum
from itertools import combinations
from typing import ClassVar, Dict, FrozenSet, Iterable, List, Optional, Tuple

from pydantic import BaseModel, model_validator

from multipitch.datasets.records import TrackRecord, expand_partial_mixes, index_by_id
from multipitch.exceptions import ValidationError
from multipitch.interfaces import TableModel
from multipitch.logger_utils import get_logger
from multipitch.splits.metadata import enrich_musicnet

logger = get_logger("splits")

PARTITIONS = ("train", "val", "test")


class LeakageRule(str, Enum):
    DISJOINT = "disjoint"
    CYCLE = "cycle"
    VERSION = "version"
    SONG = "song"


class SplitSpec(BaseModel):
    """A named train/val/test partition of track IDs."""

    name: str
    train: FrozenSet[str]
    val: FrozenSet[str] = frozenset()
    test: FrozenSet[str]
    constraints: Tuple[LeakageRule, ...] = (LeakageRule.DISJOINT,)
    provenance: str = ""
    excerpt_seconds: Optional[float] = None

    def partition(self, name: str) -> FrozenSet[str]:
        return getattr(self, name)

    def partition_of(self) -> Dict[str, str]:
        return {t: p for p in PARTITIONS for t in self.partition(p)}

    @property
    def track_ids(self) -> FrozenSet[str]:
        return self.train | self.val | self.test

    def rows(self) -> List["SplitRow"]:
        return [
            SplitRow(name=self.name, partition=p, track_id=t)
            for p in PARTITIONS
            for t in sorted(self.partition(p))
        ]


class SplitRow(TableModel):
    table_name: ClassVar[str] = "Splits"

    name: str
    partition: str
    track_id: str

    @model_validator(mode="after")
    def check_partition(self):
        if self.partition not in PARTITIONS:
            raise ValidationError(f"Unknown partition '{self.partition}'")
        return self


class ReportEntry(TableModel):
    table_name: ClassVar[str] = "Validation"
    list_fields: ClassVar[Tuple[str, ...]] = ("track_ids",)

    split: str
    severity: str  # "violation" or "finding"
    rule: str
    detail: str
    track_ids: List[str] = []


class ValidationReport(BaseModel):
    split: str
    violations: List[ReportEntry] = []
    findings: List[ReportEntry] = []

    @property
    def passed(self) -> bool:
        return not self.violations

    def entries(self) -> List[ReportEntry]:
        return self.violations + self.findings

    def by_rule(self, rule: str) -> List[ReportEntry]:
        return [e for e in self.entries() if e.rule == rule]


def _attribute_leaks(
    spec: SplitSpec, records: Dict[str, TrackRecord], attribute: str, pairs
) -> Dict[str, List[str]]:
    """Values of ``attribute`` shared by two partitions, with the tracks involved."""
    leaks: Dict[str, List[str]] = {}
    for first, second in pairs:
        values = {}
        for partition in (first, second):
            for track_id in spec.partition(partition):
                value = getattr(records[track_id], attribute) if track_id in records else ""
                if value:
                    values.setdefault(value, {}).setdefault(partition, []).append(track_id)
        for value, by_partition in values.items():
            if len(by_partition) == 2:
                leaks[f"{value} ({first}/{second})"] = sorted(
                    by_partition[first] + by_partition[second]
                )
    return leaks


def validate_split(
    spec: SplitSpec, manifest: Iterable[TrackRecord], metadata_path: Optional[str] = None
) -> ValidationReport:
    """Checks disjointness and declared leakage rules; never raises.

    MusicNet tracks are enriched from the cycle metadata and CSD works
    expanded to their partial mixes before checking. Test tracks that are
    another recording of a training or validation movement are findings.
    """
    records = index_by_id(enrich_musicnet(expand_partial_mixes(manifest), metadata_path))
    report = ValidationReport(split=spec.name)

    def violation(rule: str, detail: str, tracks):
        report.violations.append(
            ReportEntry(split=spec.name, severity="violation", rule=rule, detail=detail, track_ids=sorted(tracks))
        )

    def finding(rule: str, detail: str, tracks):
        report.findings.append(
            ReportEntry(split=spec.name, severity="finding", rule=rule, detail=detail, track_ids=sorted(tracks))
        )

    for first, second in combinations(PARTITIONS, 2):
        shared = spec.partition(first) & spec.partition(second)
        if shared:
            violation(LeakageRule.DISJOINT.value, f"tracks in both {first} and {second}", shared)

    missing = spec.track_ids - set(records)
    if missing:
        violation("missing", "tracks not in the manifest", missing)

    all_pairs = list(combinations(PARTITIONS, 2))
    if LeakageRule.CYCLE in spec.constraints:
        for value, tracks in _attribute_leaks(spec, records, "cycle_id", [("train", "test")]).items():
            violation(LeakageRule.CYCLE.value, f"cycle {value}", tracks)
    if LeakageRule.VERSION in spec.constraints:
        for value, tracks in _attribute_leaks(spec, records, "version_id", all_pairs).items():
            violation(LeakageRule.VERSION.value, f"version {value}", tracks)
    if LeakageRule.SONG in spec.constraints:
        for value, tracks in _attribute_leaks(spec, records, "movement_label", all_pairs).items():
            violation(LeakageRule.SONG.value, f"song {value}", tracks)

    # undeclared leakage, reported for every split
    train_by_cycle_version: Dict[Tuple[str, str], List[str]] = {}
    for track_id in spec.train:
        record = records.get(track_id)
        if record is not None and record.cycle_id:
            train_by_cycle_version.setdefault((record.cycle_id, record.version_id), []).append(track_id)

    for track_id in sorted(spec.test):
        record = records.get(track_id)
        if record is None or not record.cycle_id:
            continue
        partners = train_by_cycle_version.get((record.cycle_id, record.version_id), [])
        if partners:
            finding(
                "shared-cycle-version",
                f"test track {track_id} shares cycle '{record.cycle_id}' and its version with training tracks",
                [track_id] + partners,
            )

    works: Dict[str, Dict[str, List[str]]] = {}
    for partition in PARTITIONS:
        for track_id in spec.partition(partition):
            record = records.get(track_id)
            if record is not None:
                work = record.duplicate_of or track_id
                works.setdefault(work, {}).setdefault(partition, []).append(track_id)
    for _, by_partition in sorted(works.items()):
        tests = sorted(by_partition.get("test", []))
        others = sorted({t for p in ("train", "val") for t in by_partition.get(p, [])} - set(tests))
        if tests and others:
            finding(
                "version-duplicate",
                f"test track(s) {tests} record the same movement as "
                f"training/validation track(s) {others}",
                tests + others,
            )

    level = logger.info if report.passed else logger.warning
    level(
        f"Split {spec.name}: {len(report.violations)} violation(s), {len(report.findings)} finding(s)"
    )
    return report


def generate_neither_split(
    version_partition: SplitSpec, song_partition: SplitSpec, name: str = "SWD-neither"
) -> SplitSpec:
    """Cell-wise intersection; tracks outside every cell are excluded."""
    spec = SplitSpec(
        name=name,
        train=version_partition.train & song_partition.train,
        val=version_partition.val & song_partition.val,
        test=version_partition.test & song_partition.test,
        constraints=(LeakageRule.DISJOINT, LeakageRule.VERSION, LeakageRule.SONG),
        provenance=f"intersection of {version_partition.name} and {song_partition.name}",
    )
    if not spec.test:
        raise ValidationError(
            f"Intersection of {version_partition.name} and {song_partition.name} has an empty test set"
        )
    return spec
