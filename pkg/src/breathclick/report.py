"""Render evaluation artifacts as figures next to the delimited output.

Consumes the JSON/CSV files written by the ``eval`` and ``train`` commands
and produces PNGs: confusion-matrix heatmaps per prediction level, per-fold
macro-F1 bars, and training-loss curves.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .gestures import CLASS_NAMES


def plot_confusion(counts, title: str, path: Path) -> None:
    counts = np.asarray(counts, dtype=float)
    with np.errstate(invalid="ignore"):
        norm = counts / np.maximum(counts.sum(axis=1, keepdims=True), 1)
    fig, ax = plt.subplots(figsize=(5.2, 4.6))
    im = ax.imshow(norm, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(len(CLASS_NAMES)), CLASS_NAMES, rotation=45, ha="right")
    ax.set_yticks(range(len(CLASS_NAMES)), CLASS_NAMES)
    ax.set_xlabel("prediction")
    ax.set_ylabel("truth")
    ax.set_title(title)
    for i in range(len(CLASS_NAMES)):
        for j in range(len(CLASS_NAMES)):
            if counts[i, j] > 0:
                color = "white" if norm[i, j] > 0.5 else "black"
                ax.text(j, i, int(counts[i, j]), ha="center", va="center",
                        color=color, fontsize=8)
    fig.colorbar(im, ax=ax, label="row-normalized")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_fold_bars(report: dict, path: Path) -> None:
    folds = report["folds"]
    keys = [f["key"] for f in folds]
    ts = [f["timestep"]["macro"]["f1"] for f in folds]
    ev = [f["event"]["macro"]["f1"] for f in folds]
    x = np.arange(len(keys))
    fig, ax = plt.subplots(figsize=(max(5.0, 0.9 * len(keys) + 2), 3.6))
    ax.bar(x - 0.2, ts, width=0.4, label="time-step")
    ax.bar(x + 0.2, ev, width=0.4, label="event")
    ax.set_xticks(x, keys, rotation=30, ha="right")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("macro F1")
    ax.set_title(f"per-fold macro F1 ({report['mode']})")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_history(rows: list[dict], path: Path) -> None:
    epochs = [int(r["epoch"]) for r in rows]
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.plot(epochs, [float(r["train_loss"]) for r in rows], label="train")
    ax.plot(epochs, [float(r["val_loss"]) for r in rows], label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("weighted cross-entropy")
    ax.set_title("training history")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report_figures(source_dir: str | Path, out_dir: str | Path) -> list[Path]:
    """Render figures for every known artifact found in ``source_dir``.

    Looks for ``report_*.json`` (eval output) and ``history.csv`` (train
    output); returns the list of figures written.
    """
    source_dir = Path(source_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for report_path in sorted(source_dir.glob("report_*.json")):
        report = json.loads(report_path.read_text())
        mode = report.get("mode", report_path.stem.replace("report_", ""))
        for level, key in (("timestep", "joint_timestep_cm"),
                           ("event", "joint_event_cm")):
            if key in report:
                fig_path = out_dir / f"cm_{mode}_{level}.png"
                plot_confusion(report[key], f"{mode.upper()} {level} confusion",
                               fig_path)
                written.append(fig_path)
        if report.get("folds"):
            fig_path = out_dir / f"folds_{mode}.png"
            plot_fold_bars(report, fig_path)
            written.append(fig_path)

    history_path = source_dir / "history.csv"
    if history_path.exists():
        with history_path.open() as fh:
            rows = list(csv.DictReader(fh))
        if rows:
            fig_path = out_dir / "history.png"
            plot_history(rows, fig_path)
            written.append(fig_path)
    return written
