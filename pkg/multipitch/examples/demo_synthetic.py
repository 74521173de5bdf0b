import os

from multipitch.cli import commands
from multipitch.cli.experiment import ExperimentConfig
from multipitch.evaluation import read_eval
from multipitch.exceptions import MultipitchError

# Run
# python -m multipitch.examples.demo_synthetic

ROOT = "demo_synth"
CORPUS = os.path.join(ROOT, "corpus")
CACHE = os.path.join(ROOT, "cache")


def main():
    # 1. Synthesize a small corpus with known notes
    records = commands.cmd_synth(CORPUS, n_tracks=6, seed=0, duration=8.0)
    print(f"{len(records)} tracks:", [r.track_id for r in records])

    # 2. HCQT and piano-roll caches
    results, errors = commands.cmd_extract(os.path.join(CORPUS, "manifest.csv"), CACHE)
    print(f"Extracted {len(results)} tracks, {len(errors)} failed")

    # 3. Two short training runs of the smallest CNN on the tagged split
    config = ExperimentConfig(
        name="demo",
        model="CNN:XS",
        train=dict(max_epochs=3, batches_per_epoch=20, batch_size=25, device="cpu"),
        data=dict(
            manifest=os.path.join(CORPUS, "manifest.csv"),
            features=CACHE,
            split="tagged",
            train_examples=2_000,
            val_examples=500,
        ),
        seeds=[0, 1],
        output_dir=os.path.join(ROOT, "runs"),
    )
    run_dirs, errors = commands.cmd_train(config)

    # 4. Stored results
    for run_dir in run_dirs:
        report = read_eval(os.path.join(run_dir, "eval.csv"))
        print(f"{run_dir}: AP {report.macro.average_precision:.1f}, F {report.macro.f_measure:.1f}")
        for track in report.tracks:
            print("  ", track.track_id, round(track.f_measure, 1))

    # 5. Tables and figures over both runs
    try:
        table, _ = commands.cmd_report(run_dirs, os.path.join(ROOT, "report"))
        print(table)
    except MultipitchError as e:
        print("Report failed:", e)


if __name__ == "__main__":
    main()
