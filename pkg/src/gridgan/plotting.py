"""Metric-curve rendering for training logs."""

from __future__ import annotations

import csv
import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .loop import METRIC_COLUMNS

__all__ = ["plot_metrics"]


def plot_metrics(csv_path: str | Path, columns: list[str] | None = None):
    """One curve per metric column against images seen.

    Returns (figure, plotted_columns). Requested columns missing from the
    CSV are skipped with a warning; an empty CSV is an error.
    """
    csv_path = Path(csv_path)
    with open(csv_path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise ValueError(f"metrics CSV {csv_path} has no data rows")
    have = [c for c in rows[0].keys() if c != "images_seen"]
    wanted = columns if columns is not None else [c for c in METRIC_COLUMNS if c != "images_seen"]
    plotted = []
    x = [float(r["images_seen"]) for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for col in wanted:
        if col not in have:
            warnings.warn(f"metrics CSV has no column {col!r}; skipping")
            continue
        y = [float(r[col]) for r in rows if r[col] not in ("", None)]
        if len(y) != len(x):
            warnings.warn(f"column {col!r} has missing values; skipping")
            continue
        ax.plot(x, y, marker="o", markersize=3, label=col)
        plotted.append(col)
    ax.set_xlabel("images seen")
    ax.set_ylabel("metric value")
    ax.legend(loc="best")
    fig.tight_layout()
    return fig, plotted
