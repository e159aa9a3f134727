"""Matplotlib renderings written next to each report: curves, bars, heatmaps.

Everything draws through the Agg backend straight to files; no display is
assumed.  These are inspection aids — the numbers of record live in the JSON
and CSV outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .semloc import GroundTruthRegion, SemLocMap
from .textstats import Histogram


def training_curves(history: list[dict], path: str | Path) -> None:
    """Loss (left axis) and learning rate (right axis) against step."""
    steps = [h["step"] for h in history]
    fig, ax_loss = plt.subplots(figsize=(7, 4))
    ax_loss.plot(steps, [h["loss"] for h in history], color="tab:blue", label="loss")
    ax_loss.set_xlabel("step")
    ax_loss.set_ylabel("InfoNCE loss", color="tab:blue")
    ax_loss.tick_params(axis="y", labelcolor="tab:blue")
    ax_lr = ax_loss.twinx()
    ax_lr.plot(steps, [h["lr"] for h in history], color="tab:orange", label="lr")
    ax_lr.set_ylabel("learning rate", color="tab:orange")
    ax_lr.tick_params(axis="y", labelcolor="tab:orange")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def recall_bars(report: dict, path: str | Path) -> None:
    """Bar chart of the six recalls plus mean recall."""
    keys = ["r1_i2t", "r5_i2t", "r10_i2t", "r1_t2i", "r5_t2i", "r10_t2i", "mean_recall"]
    values = [report[k] for k in keys]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(keys)), values, color="tab:blue")
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels(keys, rotation=30, ha="right")
    ax.set_ylabel("recall (%)")
    ax.set_ylim(0, 105)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def accuracy_bars(accuracies: dict[str, float], path: str | Path, ylabel: str = "top-1 accuracy (%)") -> None:
    """Bar chart of named accuracy values (per class or per dataset)."""
    names = list(accuracies)
    values = [accuracies[n] for n in names]
    fig, ax = plt.subplots(figsize=(max(5, 0.45 * len(names) + 2), 4))
    ax.bar(range(len(names)), values, color="tab:green")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_ylim(0, 105)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def semloc_heatmap(m: SemLocMap, gt: GroundTruthRegion | None, path: str | Path) -> None:
    """Attention-mass heatmap with ground-truth rectangles outlined."""
    fig, ax = plt.subplots(figsize=(6, 6))
    im = ax.imshow(m.mass, cmap="viridis", origin="upper")
    if gt is not None:
        for r in gt.rects:
            ax.add_patch(
                plt.Rectangle((r.x - 0.5, r.y - 0.5), r.w, r.h, fill=False, edgecolor="red", lw=1.5)
            )
    fig.colorbar(im, ax=ax, fraction=0.046, label="mass")
    ax.set_xlabel("cell x")
    ax.set_ylabel("cell y")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def length_histogram_figure(hist: Histogram, path: str | Path) -> None:
    """Caption word-count histogram as bars over the bin ranges."""
    edges = np.arange(len(hist.counts)) * hist.bin_width
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(edges, hist.counts, width=hist.bin_width * 0.9, align="edge", color="tab:purple")
    ax.set_xlabel("caption length (words)")
    ax.set_ylabel("captions")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def token_bar_figure(frequencies: dict[str, int], path: str | Path, top_n: int = 30) -> None:
    """Horizontal bars for the most frequent tokens after stopword exclusion."""
    ranked = sorted(frequencies.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]
    names = [t for t, _ in ranked][::-1]
    values = [c for _, c in ranked][::-1]
    fig, ax = plt.subplots(figsize=(6, max(3, 0.25 * len(names) + 1)))
    ax.barh(range(len(names)), values, color="tab:red")
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=8)
    ax.set_xlabel("count")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
