from .metadata import enrich_musicnet, musicnet_cycles, read_musicnet_metadata
from .registry import (
    SPLIT_NAMES,
    SplitOptions,
    get_split,
    manifest_for,
    partition_records,
    read_split,
    write_split,
)
from .spec import (
    LeakageRule,
    ReportEntry,
    SplitRow,
    SplitSpec,
    ValidationReport,
    generate_neither_split,
    validate_split,
)
