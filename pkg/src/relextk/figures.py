"""Report figures rendered alongside the JSON/tabular outputs.

All figures are written straight to files (Agg backend, no display).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .augment import AugmentReport  # noqa: E402
from .repair import Fate, RepairReport  # noqa: E402
from .score import ScoreReport  # noqa: E402


def _save(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_score_f1(report: ScoreReport, path: str | Path) -> None:
    """Horizontal bar chart of per-class F1 with the macro line."""
    names = list(report.per_class)
    values = [report.per_class[n].f1 for n in names]
    fig, ax = plt.subplots(figsize=(8, max(3, 0.4 * len(names))))
    ax.barh(names, values, color="steelblue")
    ax.axvline(report.macro_f1, color="firebrick", linestyle="--",
               label=f"macro F1 = {report.macro_f1:.4f}")
    ax.set_xlim(0, 1)
    ax.set_xlabel("F1")
    ax.invert_yaxis()
    ax.legend(loc="lower right")
    _save(fig, path)


def plot_confusion(report: ScoreReport, path: str | Path) -> None:
    names = list(report.confusion)
    matrix = [[report.confusion[g][p] for p in names] for g in names]
    fig, ax = plt.subplots(figsize=(max(5, 0.5 * len(names)),) * 2)
    im = ax.imshow(matrix, cmap="Blues")
    ax.set_xticks(range(len(names)), names, rotation=90, fontsize=7)
    ax.set_yticks(range(len(names)), names, fontsize=7)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    fig.colorbar(im, ax=ax, shrink=0.8)
    _save(fig, path)


def plot_repair_fates(report: RepairReport, path: str | Path) -> None:
    fates = [fate.value for fate in Fate]
    counts = [report.count(fate) for fate in Fate]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(fates, counts, color=["seagreen", "goldenrod", "firebrick", "steelblue"])
    for x, n in enumerate(counts):
        ax.text(x, n, str(n), ha="center", va="bottom")
    ax.set_ylabel("sentences")
    _save(fig, path)


def plot_augment_counts(report: AugmentReport, path: str | Path) -> None:
    keys = sorted(report.counts)
    counts = [report.counts[k] for k in keys]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(keys, counts, color="steelblue")
    for x, n in enumerate(counts):
        ax.text(x, n, str(n), ha="center", va="bottom")
    ax.set_ylabel("sentences")
    ax.set_xlabel("provenance")
    _save(fig, path)
