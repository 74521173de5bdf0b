import argparse
import os
import sys
from typing import List, Optional

from multipitch import settings
from multipitch.cli import commands
from multipitch.cli.experiment import load_experiment
from multipitch.exceptions import MultipitchError
from multipitch.logger_utils import get_logger
from multipitch.splits import SPLIT_NAMES, SplitOptions

logger = get_logger("cli.main")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multipitch", description="Multi-pitch estimation experiments on HCQT features."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-features", help="compute HCQT and piano-roll caches")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None, help="cache root (default: $MULTIPITCH_CACHE_ROOT)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--force", action="store_true", help="recompute up-to-date tracks")

    p = sub.add_parser("make-splits", help="materialize and validate published splits")
    p.add_argument("--manifest", required=True)
    p.add_argument("--name", action="append", choices=SPLIT_NAMES, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--musicnet-metadata", default=None, help="MusicNet's musicnet_metadata.csv")

    p = sub.add_parser("train", help="train one model per seed")
    p.add_argument("--config", default=None, help="experiment JSON")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("--seeds", type=int, nargs="+", default=None)
    p.add_argument("--out", default=None, help="output directory for run directories")

    p = sub.add_parser("evaluate", help="re-evaluate a run directory")
    p.add_argument("run_dir")
    p.add_argument("--manifest", default=None)
    p.add_argument("--features", default=None)
    p.add_argument("--checkpoint", default="best.ckpt")

    p = sub.add_parser("report", help="tables and figures over run directories")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out", required=True)

    p = sub.add_parser("synth-corpus", help="generate a synthetic corpus with known notes")
    p.add_argument("--out", required=True)
    p.add_argument("--n-tracks", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration", type=float, default=10.0)
    return parser


def run(args: argparse.Namespace) -> int:
    errors = []
    out_dir = getattr(args, "out", None) or "."

    try:
        if args.command == "extract-features":
            out_dir = args.out or settings.cache_root()
            _, errors = commands.cmd_extract(args.manifest, out_dir, args.workers, args.force)
        elif args.command == "make-splits":
            options = SplitOptions(musicnet_metadata=args.musicnet_metadata)
            _, errors = commands.cmd_make_splits(args.manifest, args.name, args.out, options)
        elif args.command == "train":
            overrides = list(args.overrides)
            if args.seeds:
                overrides.append(f"seeds={args.seeds}")
            if args.out:
                overrides.append(f"output_dir={args.out}")
            config = load_experiment(args.config, overrides)
            out_dir = config.output_dir
            _, errors = commands.cmd_train(config)
        elif args.command == "evaluate":
            out_dir = args.run_dir
            report = commands.cmd_evaluate(args.run_dir, args.manifest, args.features, args.checkpoint)
            logger.info(f"{args.run_dir}: macro AP {report.macro.average_precision}")
        elif args.command == "report":
            _, errors = commands.cmd_report(args.run_dirs, args.out)
        elif args.command == "synth-corpus":
            commands.cmd_synth(args.out, args.n_tracks, args.seed, args.duration)
    except MultipitchError as e:
        errors = list(errors) + [commands.error_row(args.command, e)]

    if errors:
        os.makedirs(out_dir, exist_ok=True)
        path = commands.write_errors(out_dir, errors)
        logger.error(f"{len(errors)} item(s) failed; see {path}")
        return 1
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
