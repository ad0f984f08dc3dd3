"""Figures for the command-line reports, rendered off-screen to PNG files."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

AXIS_LABELS = ("cost (Yuan)", "PEC (kWh)", "CDE (g)")


def _save(fig, path: Path) -> None:
    """Write ``fig`` next to ``path`` and rename it into place."""
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=120, metadata={"Software": None})
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)


def plot_front(front: np.ndarray, best: np.ndarray, path: Path, title: str = "") -> None:
    """Pairwise projections of a three-objective front with the chosen point marked."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.8), constrained_layout=True)
    for ax, (i, j) in zip(axes, ((0, 1), (0, 2), (1, 2))):
        ax.scatter(front[:, i], front[:, j], s=12, color="tab:blue", label="front")
        ax.scatter([best[i]], [best[j]], s=60, marker="*", color="tab:red", label="best compromise")
        ax.set_xlabel(AXIS_LABELS[i])
        ax.set_ylabel(AXIS_LABELS[j])
        ax.ticklabel_format(style="sci", scilimits=(-3, 5))
    axes[0].legend(loc="best", fontsize=8)
    if title:
        fig.suptitle(title)
    _save(fig, path)


def plot_rates(rates: np.ndarray, path: Path, title: str = "") -> None:
    """Bar chart of the percentage reduction per objective against the reference system."""
    fig, ax = plt.subplots(figsize=(5, 3.5), constrained_layout=True)
    colors = ["tab:green" if r >= 0 else "tab:red" for r in rates]
    ax.bar(["cost", "PEC", "CDE"], rates, color=colors)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_ylabel("reduction vs reference (%)")
    for k, r in enumerate(rates):
        ax.annotate(f"{r:.1f}%", (k, r), ha="center", va="bottom" if r >= 0 else "top", fontsize=8)
    if title:
        ax.set_title(title)
    _save(fig, path)


def plot_indicators(samples: dict[str, dict[str, np.ndarray]], path: Path, title: str = "") -> None:
    """Box plots of HV and spread samples per algorithm.

    Args:
        samples: ``{"HV": {algorithm: values}, "spread": {algorithm: values}}``.
    """
    fig, axes = plt.subplots(1, len(samples), figsize=(4.5 * len(samples), 3.8), constrained_layout=True)
    for ax, (indicator, per_algo) in zip(np.atleast_1d(axes), samples.items()):
        names = list(per_algo)
        ax.boxplot([per_algo[n] for n in names])
        ax.set_xticks(range(1, len(names) + 1), names)
        ax.set_ylabel(indicator)
    if title:
        fig.suptitle(title)
    _save(fig, path)
