"""Sweep report rendering: accuracy-vs-iteration curves as image files
next to the tab-separated report."""

from __future__ import annotations

import os
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .evaluate import IterationReport, render_table, render_tsv  # noqa: E402


def render_curves(series: Mapping[str, Sequence[float]], out_path: str,
                  title: str = "Ambiguous-word accuracy by iteration") -> str:
    """Plot one accuracy curve per algorithm and write a PNG."""
    fig, ax = plt.subplots(figsize=(8, 5))
    for name, values in series.items():
        ax.plot(range(1, len(values) + 1), values, marker=".", label=name)
    ax.set_xlabel("iteration")
    ax.set_ylabel("accuracy (%)")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    if series:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def write_sweep_report(reports: Sequence[IterationReport],
                       series: Mapping[str, Sequence[float]],
                       out_dir: str, basename: str = "sweep") -> dict[str, str]:
    """Write the fixed-width table, the TSV sibling, and the curve figure
    into out_dir; returns {kind: path}."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "table": os.path.join(out_dir, f"{basename}.txt"),
        "tsv": os.path.join(out_dir, f"{basename}.tsv"),
        "figure": os.path.join(out_dir, f"{basename}.png"),
    }
    with open(paths["table"], "w", encoding="utf-8") as fh:
        fh.write(render_table(reports))
    with open(paths["tsv"], "w", encoding="utf-8") as fh:
        fh.write(render_tsv(reports))
    render_curves(series, paths["figure"])
    return paths
