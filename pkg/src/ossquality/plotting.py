"""Figures written next to the ranking, evaluation and score reports."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=path.suffix)
    os.close(fd)
    try:
        fig.savefig(tmp, bbox_inches="tight", metadata={"Software": None})
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path


def plot_ranking(scores: Sequence, path, title: str = "") -> Path:
    """Side-by-side horizontal bars of IG and chi-square, IG order top-down."""
    rows = sorted(scores, key=lambda s: s.rank_ig)
    names = [s.name for s in rows][::-1]
    ig = [s.information_gain for s in rows][::-1]
    chi = [s.chi_square for s in rows][::-1]
    with plt.rc_context(RC):
        height = max(2.0, 0.28 * len(rows) + 1.0)
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, height), sharey=True)
        y = np.arange(len(rows))
        ax1.barh(y, ig, color="#4c72b0")
        ax1.set_xlabel("Information Gain (bits)")
        ax1.set_yticks(y, names)
        ax2.barh(y, chi, color="#dd8452")
        ax2.set_xlabel("Chi-Square")
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def plot_evaluation(rows: Sequence[tuple[str, float, float, float]], path, title: str = "") -> Path:
    """Grouped precision/recall/F bars; ``rows`` are ``(label, P, R, F)``."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(rows) + 1.5), 3.2))
        x = np.arange(len(rows))
        width = 0.26
        for offset, (key, color) in enumerate((("Precision", "#4c72b0"), ("Recall", "#55a868"),
                                               ("F-Measure", "#c44e52"))):
            ax.bar(x + (offset - 1) * width, [r[offset + 1] for r in rows], width, label=key, color=color)
        ax.set_xticks(x, [r[0] for r in rows], rotation=20, ha="right")
        ax.set_ylim(0, 1.2)
        ax.set_yticks([0, 0.2, 0.4, 0.6, 0.8, 1.0])
        ax.legend(loc="upper center", ncol=3, frameon=False)
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_scores(successfulness, path, title: str = "") -> Path:
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 3))
        ax.hist(np.asarray(successfulness, dtype=float), bins=20, range=(0, 1), color="#8172b3")
        ax.axvline(0.5, color="k", linewidth=0.8, linestyle="--")
        ax.set_xlabel("successfulness")
        ax.set_ylabel("projects")
        if title:
            ax.set_title(title)
        return _save(fig, path)
