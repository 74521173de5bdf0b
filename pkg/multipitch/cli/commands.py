"""The work behind each subcommand.

Every command handles failures per item (track, split, seed, run): the
``MultipitchError`` is logged and collected as an ``ErrorRow`` so the
remaining items still run.
"""

import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from typing import ClassVar, Dict, List, Optional, Sequence, Tuple

import numpy as np

from multipitch.backends import CsvDB, ExcelDB
from multipitch.cli import experiment as ex
from multipitch.cli.plots import plot_grouped_bars, plot_scatter
from multipitch.datasets import (
    ExtractResult,
    TrackFeatures,
    TrackRecord,
    TrainStream,
    ValStream,
    build_corpus,
    choose_stride,
    expand_partial_mixes,
    extract_track,
    load_features,
    read_manifest,
    synthesize_corpus,
)
from multipitch.evaluation import (
    EvalReport,
    MetricStats,
    check_compatible,
    evaluate_tracks,
    read_eval,
    scatter_points,
    variance_report,
    write_eval,
)
from multipitch.exceptions import MultipitchError, NotFoundError
from multipitch.interfaces import TableModel
from multipitch.logger_utils import attach_file_handler, detach_file_handlers, get_logger
from multipitch.models import MultipitchNet, build_model, count_params, load_checkpoint
from multipitch.splits import (
    ReportEntry,
    SplitOptions,
    SplitSpec,
    get_split,
    partition_records,
    read_split,
    validate_split,
    write_split,
)
from multipitch.training import train, write_history

logger = get_logger("cli")


class ErrorRow(TableModel):
    table_name: ClassVar[str] = "Errors"

    item: str
    code: str
    detail: str


class TableRow(TableModel):
    table_name: ClassVar[str] = "Table"

    model: str
    family: str
    size: str = ""
    params: int
    split: str
    n_runs: int
    precision: float
    recall: float
    f_measure: float
    average_precision: Optional[float] = None
    accuracy: float


class PerTrackRow(TableModel):
    table_name: ClassVar[str] = "PerTrack"

    model: str
    split: str
    seed: int
    track_id: str
    average_precision: Optional[float] = None
    f_measure: float


class SplitComparisonRow(TableModel):
    table_name: ClassVar[str] = "Splits"

    model: str
    split: str
    n_runs: int
    average_precision: Optional[float] = None
    ap_min: Optional[float] = None
    ap_max: Optional[float] = None


class GroupStats(MetricStats):
    table_name: ClassVar[str] = "Variance"

    model: str = ""
    split: str = ""


def error_row(item: str, error: MultipitchError) -> ErrorRow:
    logger.error(f"{item}: {error}")
    return ErrorRow(item=item, code=error.code, detail=error.detail)


def write_errors(out_dir: str, errors: Sequence[ErrorRow]) -> Optional[str]:
    if not errors:
        return None
    path = os.path.join(out_dir, "errors.csv")
    CsvDB(path).replace_all(list(errors))
    return path


# extract-features


def _extract_one(args: Tuple[TrackRecord, str, bool]) -> Tuple[Optional[ExtractResult], Optional[ErrorRow]]:
    record, out_dir, force = args
    try:
        return extract_track(record, out_dir, force=force), None
    except MultipitchError as e:
        return None, error_row(record.track_id, e)


def cmd_extract(
    manifest: str, out_dir: str, workers: int = 1, force: bool = False
) -> Tuple[List[ExtractResult], List[ErrorRow]]:
    """HCQT and piano-roll caches for every manifest track, derived partial mixes included."""
    records = expand_partial_mixes(read_manifest(manifest))
    jobs = [(record, out_dir, force) for record in records]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_extract_one, jobs))
    else:
        outcomes = [_extract_one(job) for job in jobs]

    results = [r for r, _ in outcomes if r is not None]
    errors = [e for _, e in outcomes if e is not None]
    written = sum(r.written for r in results)
    logger.info(
        f"Extracted {written} track(s), {len(results) - written} up to date, {len(errors)} failed"
    )
    return results, errors


# make-splits


def cmd_make_splits(
    manifest: str, names: Sequence[str], out_dir: str, options: Optional[SplitOptions] = None
) -> Tuple[List[SplitSpec], List[ErrorRow]]:
    records = read_manifest(manifest)
    specs, entries, errors = [], [], []
    for name in names:
        try:
            spec = get_split(name, records, options)
            report = validate_split(spec, records, options.musicnet_metadata if options else None)
        except MultipitchError as e:
            errors.append(error_row(name, e))
            continue
        write_split(os.path.join(out_dir, f"{name}.csv"), spec)
        entries += report.entries()
        specs.append(spec)
        for violation in report.violations:
            errors.append(
                ErrorRow(item=name, code="split_violation", detail=f"{violation.rule}: {violation.detail}")
            )
        logger.info(
            f"{name}: {'passed' if report.passed else 'FAILED'}, "
            f"{len(report.violations)} violation(s), {len(report.findings)} finding(s)"
        )
    report_db = CsvDB(os.path.join(out_dir, "validation.csv"))
    if entries:
        report_db.replace_all(entries)
    else:
        report_db.create_table(ReportEntry)
    return specs, errors


# train / evaluate


def resolve_split(config: ex.ExperimentConfig, manifest: Sequence[TrackRecord]) -> SplitSpec:
    if config.data.split_file:
        return read_split(config.data.split_file, config.data.split)
    return get_split(config.data.split, manifest, config.splits)


def _load_tracks(
    records: Sequence[TrackRecord], cache_dir: str, excerpt_seconds: Optional[float] = None
) -> List[TrackFeatures]:
    return [load_features(record, cache_dir, excerpt_seconds) for record in records]


def _run_fields(config: ex.ExperimentConfig, model: MultipitchNet, split: str, seed: int, run_dir: str) -> Dict:
    return {
        "run_id": os.path.basename(os.path.normpath(run_dir)),
        "model": config.model_label,
        "family": config.model.family.value,
        "size": config.model.size or "",
        "params": count_params(model),
        "split": split,
        "seed": seed,
    }


def run_seed(
    config: ex.ExperimentConfig,
    spec: SplitSpec,
    train_tracks: List[TrackFeatures],
    val_tracks: List[TrackFeatures],
    test_tracks: List[TrackFeatures],
) -> str:
    """One complete run: snapshot, training, checkpoints, history and test evaluation."""
    seed = config.train.seed
    run_dir = config.run_dir(seed)
    os.makedirs(run_dir, exist_ok=True)
    attach_file_handler(os.path.join(run_dir, ex.LOG_FILE))
    try:
        md5 = ex.write_snapshot(run_dir, config)
        ex.write_environment(run_dir, config)
        write_split(os.path.join(run_dir, ex.SPLIT_FILE), spec)
        logger.info(f"Run {run_dir}: config md5 {md5}, permutation seed {seed}")

        train_stride = choose_stride(config.data.train_examples, [t.n_frames for t in train_tracks])
        val_stride = choose_stride(config.data.val_examples, [t.n_frames for t in val_tracks])
        train_corpus = build_corpus(train_tracks, train_stride)
        val_corpus = build_corpus(val_tracks, val_stride)
        logger.info(
            f"{len(train_corpus)} training patches (stride {train_stride}), "
            f"{len(val_corpus)} validation patches (stride {val_stride})"
        )
        train_stream = TrainStream(
            train_corpus, config.train.batch_size, seed, policy=config.augmentation
        )
        val_stream = ValStream(val_corpus, config.train.batch_size)

        model = build_model(config.model, seed=seed)
        model, history = train(model, train_stream, val_stream, config.train, checkpoint_dir=run_dir)
        write_history(run_dir, history)

        if test_tracks:
            report = evaluate_tracks(
                model,
                test_tracks,
                threshold=config.threshold,
                device=config.train.device,
                **_run_fields(config, model, spec.name, seed, run_dir),
            )
            write_eval(os.path.join(run_dir, ex.EVAL_FILE), report)
            logger.info(f"Run {run_dir}: macro AP {report.macro.average_precision}")
    finally:
        detach_file_handlers()
    return run_dir


def cmd_train(config: ex.ExperimentConfig) -> Tuple[List[str], List[ErrorRow]]:
    """Trains one model per seed; a failing seed does not stop the others."""
    manifest = read_manifest(config.data.manifest)
    spec = resolve_split(config, manifest)
    train_records, val_records, test_records = partition_records(spec, manifest)
    cache = config.data.feature_dir
    train_tracks = _load_tracks(train_records, cache)
    val_tracks = _load_tracks(val_records, cache)
    test_tracks = _load_tracks(test_records, cache, spec.excerpt_seconds)

    run_dirs, errors = [], []
    for seed in config.seeds:
        try:
            run_dirs.append(run_seed(config.for_seed(seed), spec, train_tracks, val_tracks, test_tracks))
        except MultipitchError as e:
            errors.append(error_row(f"seed {seed}", e))
    return run_dirs, errors


def cmd_evaluate(
    run_dir: str,
    manifest: Optional[str] = None,
    features: Optional[str] = None,
    checkpoint: str = ex.BEST_CHECKPOINT,
) -> EvalReport:
    """Re-evaluates a run's checkpoint on its stored split, rewriting ``eval.csv``."""
    config = ex.read_snapshot(run_dir)
    spec = read_split(os.path.join(run_dir, ex.SPLIT_FILE), config.data.split)
    records = read_manifest(manifest or config.data.manifest)
    _, _, test_records = partition_records(spec, records)
    if not test_records:
        raise NotFoundError(f"Split {spec.name} of {run_dir} has no test tracks in the manifest")
    test_tracks = _load_tracks(test_records, features or config.data.feature_dir, spec.excerpt_seconds)

    model, _ = load_checkpoint(os.path.join(run_dir, checkpoint), device=config.train.device)
    report = evaluate_tracks(
        model,
        test_tracks,
        threshold=config.threshold,
        device=config.train.device,
        **_run_fields(config, model, spec.name, config.train.seed, run_dir),
    )
    write_eval(os.path.join(run_dir, ex.EVAL_FILE), report)
    return report


# report


def _mean(values: Sequence[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return round(float(np.mean(present)), 1) if present else None


def _table_row(runs: Sequence[EvalReport]) -> TableRow:
    first = runs[0]
    return TableRow(
        model=first.model,
        family=first.family,
        size=first.size,
        params=first.params,
        split=first.split,
        n_runs=len(runs),
        precision=_mean([r.macro.precision for r in runs]),
        recall=_mean([r.macro.recall for r in runs]),
        f_measure=_mean([r.macro.f_measure for r in runs]),
        average_precision=_mean([r.macro.average_precision for r in runs]),
        accuracy=_mean([r.macro.accuracy for r in runs]),
    )


def cmd_report(run_dirs: Sequence[str], out_dir: str) -> Tuple[List[TableRow], List[ErrorRow]]:
    """Tables and figures computed only from the stored ``eval.csv`` files."""
    reports, errors = [], []
    for run_dir in run_dirs:
        try:
            reports.append(read_eval(os.path.join(run_dir, ex.EVAL_FILE)))
        except MultipitchError as e:
            errors.append(error_row(run_dir, e))
    if not reports:
        raise NotFoundError("No readable evaluation results among the given run directories")

    groups: Dict[Tuple[str, str], List[EvalReport]] = defaultdict(list)
    for report in reports:
        groups[(report.model, report.split)].append(report)
    for runs in groups.values():
        check_compatible(runs)

    os.makedirs(out_dir, exist_ok=True)
    table = [_table_row(runs) for _, runs in sorted(groups.items())]
    CsvDB(os.path.join(out_dir, "table.csv")).replace_all(table)
    xlsx = ExcelDB(os.path.join(out_dir, "table.xlsx"))
    xlsx.delete_all(TableRow)
    xlsx.insert_many(table)

    points = scatter_points(reports)
    CsvDB(os.path.join(out_dir, "scatter.csv")).replace_all(points)
    plot_scatter(points, os.path.join(out_dir, "scatter.png"))

    per_track = [
        PerTrackRow(
            model=r.model,
            split=r.split,
            seed=r.seed,
            track_id=t.track_id,
            average_precision=t.average_precision,
            f_measure=t.f_measure,
        )
        for r in reports
        for t in r.tracks
    ]
    CsvDB(os.path.join(out_dir, "per_track.csv")).replace_all(per_track)
    bars: Dict[str, Dict[str, float]] = defaultdict(dict)
    for row in per_track:
        if row.average_precision is not None:
            bars[row.track_id][f"{row.model} ({row.split}) seed {row.seed}"] = row.average_precision
    plot_grouped_bars(bars, os.path.join(out_dir, "per_track.png"), xlabel="Test track")

    comparison = []
    for (model, split), runs in sorted(groups.items()):
        aps = [r.macro.average_precision for r in runs if r.macro.average_precision is not None]
        comparison.append(
            SplitComparisonRow(
                model=model,
                split=split,
                n_runs=len(runs),
                average_precision=_mean(aps),
                ap_min=min(aps) if aps else None,
                ap_max=max(aps) if aps else None,
            )
        )
    CsvDB(os.path.join(out_dir, "splits.csv")).replace_all(comparison)
    split_bars: Dict[str, Dict[str, float]] = defaultdict(dict)
    for row in comparison:
        if row.average_precision is not None:
            split_bars[row.model][row.split] = row.average_precision
    plot_grouped_bars(split_bars, os.path.join(out_dir, "splits.png"), xlabel="Model")

    variance = []
    for (model, split), runs in sorted(groups.items()):
        if len(runs) < 2:
            continue
        summary = variance_report(runs)
        variance += [
            GroupStats(model=model, split=split, **stats.model_dump())
            for stats in summary.macro + summary.per_track
        ]
    if variance:
        CsvDB(os.path.join(out_dir, "variance.csv")).replace_all(variance)

    logger.info(f"Report over {len(reports)} run(s) in {len(groups)} group(s) written to {out_dir}")
    return table, errors


def cmd_synth(out_dir: str, n_tracks: int = 60, seed: int = 0, duration: float = 10.0) -> List[TrackRecord]:
    records = synthesize_corpus(out_dir, n_tracks=n_tracks, duration=duration, seed=seed)
    logger.info(f"Synthesized {len(records)} track(s) into {out_dir}")
    return records
