"""Report figures, rendered off-screen."""

from collections import defaultdict
from typing import Dict, List, Sequence

import matplotlib as mpl

mpl.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from multipitch.evaluation import ScatterPoint  # noqa: E402

FIGSIZE = (7.0, 4.0)


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_scatter(points: Sequence[ScatterPoint], path: str) -> None:
    """Parameter count against macro AP, one marker per run; re-runs stack vertically."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    by_family: Dict[str, List[ScatterPoint]] = defaultdict(list)
    for point in points:
        if point.average_precision is not None:
            by_family[point.family].append(point)
    for family, members in sorted(by_family.items()):
        ax.scatter(
            [p.params / 1e3 for p in members],
            [p.average_precision for p in members],
            label=family,
            alpha=0.7,
        )
    ax.set_xscale("log")
    ax.set_xlabel("Parameters (thousands)")
    ax.set_ylabel("AP (%)")
    ax.grid(True, alpha=0.3)
    if by_family:
        ax.legend(fontsize=8)
    _save(fig, path)


def plot_grouped_bars(
    values: Dict[str, Dict[str, float]], path: str, xlabel: str, ylabel: str = "AP (%)"
) -> None:
    """Bars grouped on the x axis by the outer key, one colour per inner key."""
    groups = list(values)
    series = sorted({name for inner in values.values() for name in inner})
    width = 0.8 / max(len(series), 1)
    x = np.arange(len(groups))

    fig, ax = plt.subplots(figsize=(max(FIGSIZE[0], 0.4 * len(groups) * max(len(series), 1)), FIGSIZE[1]))
    for index, name in enumerate(series):
        heights = [values[g].get(name, np.nan) for g in groups]
        ax.bar(x + index * width - 0.4 + width / 2, heights, width, label=name, alpha=0.8)
    ax.set_xticks(x)
    ax.set_xticklabels(groups, rotation=60, ha="right", fontsize=7)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, axis="y", alpha=0.3)
    if series:
        ax.legend(fontsize=7)
    _save(fig, path)

