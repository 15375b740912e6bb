"""Matplotlib renderings written next to the JSON reports.

Every CLI path that emits a report also drops a PNG with the same stem so
runs can be eyeballed without loading the JSON.  The Agg backend keeps
rendering headless and output bytes stable for a given input.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_training_curves(report: dict, path: str | Path) -> None:
    """Loss curve plus final accuracies for one training run."""
    fig, ax = plt.subplots(figsize=(6, 4))
    losses = report["epoch_losses"]
    ax.plot(range(1, len(losses) + 1), losses, lw=1.5)
    ax.set_xlabel("epoch")
    ax.set_ylabel("training loss")
    encoding = report["config"]["time_encoding"]
    ax.set_title(
        f"time encoding: {encoding}  "
        f"train acc {report['train_accuracy']:.3f}  "
        f"test acc {report['test_accuracy']:.3f}"
    )
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def render_eval_summary(report: dict, path: str | Path) -> None:
    """Bar chart of the headline evaluation metrics."""
    fig, ax = plt.subplots(figsize=(6, 4))
    metrics = [
        ("accuracy", report["accuracy"]),
        ("R@1 IoU 0.5", report["r1_iou_0.5"]),
        ("R@1 IoU 0.7", report["r1_iou_0.7"]),
    ]
    names = [name for name, _ in metrics]
    values = [value for _, value in metrics]
    bars = ax.bar(names, values, color=["#4878a8", "#6aa84f", "#a8784e"])
    for bar, value in zip(bars, values):
        ax.text(bar.get_x() + bar.get_width() / 2, value + 0.01, f"{value:.3f}",
                ha="center", va="bottom", fontsize=9)
    ax.set_ylim(0, 1.1)
    ax.set_ylabel("score")
    ax.set_title(f"{report['n']} items, judge: {report['judge_mode']}")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
