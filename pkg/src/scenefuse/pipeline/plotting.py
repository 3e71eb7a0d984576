"""Figures written next to the text/JSON reports."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .data import QUERY_TYPES  # noqa: E402

STYLE = {
    "font.family": "serif",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 7,
    "legend.frameon": False,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "lines.linewidth": 1.2,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.bbox": "tight",
    "savefig.pad_inches": 0.03,
}
COLORS = {"lidar": "#1b9e77", "occ": "#d95f02", "desc": "#7570b3"}


def fig_size(width=3.4, ratio=None):
    """Width in inches; height follows the golden ratio unless given."""
    ratio = (math.sqrt(5) - 1.0) / 2.0 if ratio is None else ratio
    return (width, width * ratio)


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no software/date metadata so reruns are byte-identical
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_loss_curve(losses, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=fig_size())
        ax.plot(range(1, len(losses) + 1), losses, color="k")
        if losses and min(losses) > 0:
            ax.set_yscale("log")
        ax.set_xlabel("epoch")
        ax.set_ylabel("training cross-entropy")
        return _save(fig, path)


def plot_gate_weights(gate_by_query_type, path):
    """Grouped bars: mean fusion weight of each modality, per query type."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=fig_size())
        width = 0.26
        for j, mod in enumerate(QUERY_TYPES):
            heights = [(gate_by_query_type.get(q) or [0.0, 0.0, 0.0])[j] for q in QUERY_TYPES]
            xs = [i + (j - 1) * width for i in range(len(QUERY_TYPES))]
            ax.bar(xs, heights, width, label=mod, color=COLORS[mod])
        ax.axhline(1.0 / 3.0, color="0.5", lw=0.8, ls="--")
        ax.set_xticks(range(len(QUERY_TYPES)))
        ax.set_xticklabels([f"asks {q}" for q in QUERY_TYPES])
        ax.set_ylim(0, 1)
        ax.set_ylabel("mean fusion weight")
        ax.legend(ncol=3, loc="upper center")
        return _save(fig, path)


def plot_ablation(rows, path):
    groups = []
    for r in rows:
        if r.group not in groups:
            groups.append(r.group)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(groups), figsize=fig_size(2.4 * len(groups), 0.8 / len(groups)),
                                 squeeze=False, sharey=True)
        for ax, group in zip(axes[0], groups):
            sel = [r for r in rows if r.group == group]
            xs = range(len(sel))
            ax.bar([x - 0.2 for x in xs], [r.accuracy for r in sel], 0.4, color="0.25", label="accuracy")
            ax.bar([x + 0.2 for x in xs], [r.masked_accuracy for r in sel], 0.4, color="0.7",
                   label="relevant masked")
            ax.set_xticks(list(xs))
            ax.set_xticklabels([r.name for r in sel], rotation=30, ha="right")
            ax.set_title(group)
            ax.set_ylim(0, 1.05)
        axes[0][0].set_ylabel("held-out accuracy")
        handles, labels = axes[0][0].get_legend_handles_labels()
        fig.legend(handles, labels, loc="lower center", ncol=2, bbox_to_anchor=(0.5, 1.0))
        return _save(fig, path)
