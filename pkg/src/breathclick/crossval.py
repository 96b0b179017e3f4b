"""Leave-one-person-out / leave-one-scenario-out evaluation harness.

Each fold trains a fresh classifier on the remaining sessions (with
augmentation applied to the training side only), predicts the held-out
sessions, cleans the time-step predictions, derives events, and scores
both levels.  Fold seeds are derived from the run seed and the fold key,
so results do not depend on worker count or execution order.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .augment import AugmentConfig, augment_set
from .config import derive_seed
from .dataset import class_weights
from .errors import InsufficientFoldsError
from .gestures import CLASS_NAMES
from .metrics import ConfusionMatrix, Report, match_events, metrics, score_timesteps
from .net import ModelConfig, TrainConfig, predict_timesteps, train
from .net.training import extract_window_matrix, step_labels
from .postproc import eventize, optimize, spans_from_steps
from .signals import LabeledSeries, Scenario


@dataclass
class FoldResult:
    """Scores of one hold-out fold at both prediction levels."""

    key: str
    timestep_cm: ConfusionMatrix
    event_cm: ConfusionMatrix
    timestep: Report
    event: Report
    n_pred_events: int
    n_truth_spans: int
    epochs_run: int


@dataclass
class CvReport:
    """Per-fold results plus Table-style mean/std aggregates."""

    mode: str
    folds: list[FoldResult]
    aggregates: dict[str, dict[str, float]]
    joint_timestep_cm: ConfusionMatrix
    joint_event_cm: ConfusionMatrix

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n_folds": len(self.folds),
            "aggregates": self.aggregates,
            "folds": [
                {
                    "key": f.key,
                    "epochs_run": f.epochs_run,
                    "n_pred_events": f.n_pred_events,
                    "n_truth_spans": f.n_truth_spans,
                    "timestep": f.timestep.as_dict(),
                    "event": f.event.as_dict(),
                }
                for f in self.folds
            ],
            "joint_timestep_cm": self.joint_timestep_cm.counts.tolist(),
            "joint_event_cm": self.joint_event_cm.counts.tolist(),
        }


def _fold_key(series: LabeledSeries, mode: str) -> str:
    return series.subject_id if mode == "lopo" else series.scenario.value


def _gather_training_windows(
    train_series: list[LabeledSeries], window: int, cap: int | None, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Window labels first, then materialize only the kept window values.

    With a per-class cap this avoids stacking every overlapping window of
    every (augmented) series into memory at once.
    """
    labels = [step_labels(s, window) for s in train_series]
    y_all = np.concatenate(labels)
    if cap is None:
        keep = np.arange(len(y_all))
    else:
        rng = np.random.default_rng(seed)
        keep = np.sort(np.concatenate(
            [rng.permutation(np.flatnonzero(y_all == c))[:cap]
             for c in np.unique(y_all)]
        ))
    parts = []
    offset = 0
    for series, y_series in zip(train_series, labels):
        local = keep[(keep >= offset) & (keep < offset + len(y_series))] - offset
        if len(local):
            parts.append(extract_window_matrix(series, window)[local])
        offset += len(y_series)
    return np.concatenate(parts), y_all[keep]


def _run_fold(args) -> FoldResult:
    (key, train_series, test_series, model_cfg, train_cfg, augment_cfg,
     strategies, cap, seed) = args

    if augment_cfg is not None:
        aug_cfg = replace(augment_cfg, seed=derive_seed(seed, f"fold/{key}/augment"))
        train_series = augment_set(train_series, aug_cfg)
    x, y = _gather_training_windows(
        train_series, model_cfg.window, cap,
        derive_seed(seed, f"fold/{key}/subsample"),
    )

    fold_train_cfg = replace(train_cfg, seed=derive_seed(seed, f"fold/{key}/train"))
    model, history = train((x, y), model_cfg, fold_train_cfg,
                           class_weights=class_weights(y))

    s1, s2, s3 = strategies
    ts_cm = ConfusionMatrix()
    ev_cm = ConfusionMatrix()
    n_pred_events = n_truth_spans = 0
    for series in test_series:
        raw = predict_timesteps(model, series)
        cleaned = optimize(raw, s1, s2, s3)
        truth = step_labels(series, model_cfg.window)
        ts_cm += score_timesteps(cleaned, truth)
        events = eventize(cleaned)
        truth_spans = spans_from_steps(truth)
        ev_cm += match_events(events, truth_spans)
        n_pred_events += len(events)
        n_truth_spans += len(truth_spans)

    return FoldResult(
        key=key,
        timestep_cm=ts_cm,
        event_cm=ev_cm,
        timestep=metrics(ts_cm),
        event=metrics(ev_cm),
        n_pred_events=n_pred_events,
        n_truth_spans=n_truth_spans,
        epochs_run=len(history),
    )


def run_cv(
    sessions: list[LabeledSeries],
    mode: str,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    augment_cfg: AugmentConfig | None = None,
    strategies: tuple[bool, bool, bool] = (True, True, True),
    max_windows_per_class: int | None = None,
    seed: int = 0,
    n_jobs: int = 1,
) -> CvReport:
    """Cross-validate the full pipeline over subjects or scenarios.

    ``mode`` is ``"lopo"`` (fold per subject) or ``"loso"`` (fold per
    scenario).  ``augment_cfg=None`` disables training-set augmentation;
    the held-out sessions are never augmented either way.

    Raises
    ------
    InsufficientFoldsError
        With fewer than two distinct hold-out keys.
    """
    if mode not in ("lopo", "loso"):
        raise ValueError(f"mode must be 'lopo' or 'loso', got {mode!r}")
    keys = sorted({_fold_key(s, mode) for s in sessions})
    if len(keys) < 2:
        raise InsufficientFoldsError(
            f"{mode} needs at least 2 hold-out keys, found {len(keys)}"
        )

    tasks = []
    for key in keys:
        train_series = [s for s in sessions if _fold_key(s, mode) != key]
        test_series = [s for s in sessions if _fold_key(s, mode) == key]
        tasks.append((key, train_series, test_series, model_cfg, train_cfg,
                      augment_cfg, strategies, max_windows_per_class, seed))

    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=min(n_jobs, len(tasks))) as pool:
            folds = list(pool.map(_run_fold, tasks))
    else:
        folds = [_run_fold(t) for t in tasks]

    joint_ts = ConfusionMatrix()
    joint_ev = ConfusionMatrix()
    for f in folds:
        joint_ts += f.timestep_cm
        joint_ev += f.event_cm
    return CvReport(
        mode=mode,
        folds=folds,
        aggregates=_aggregate(folds),
        joint_timestep_cm=joint_ts,
        joint_event_cm=joint_ev,
    )


_METRIC_FIELDS = (
    "macro_f1", "macro_precision", "macro_recall",
    "weighted_f1", "weighted_precision", "weighted_recall", "accuracy",
)


def _aggregate(folds: list[FoldResult]) -> dict[str, dict[str, float]]:
    """Mean and population std of each metric across folds, per level."""
    out: dict[str, dict[str, float]] = {}
    for level in ("timestep", "event"):
        stats = {}
        for name in _METRIC_FIELDS:
            values = np.array([getattr(getattr(f, level), name) for f in folds])
            stats[name] = float(values.mean())
            stats[name + "_std"] = float(values.std())
        out[level] = stats
    return out


def write_report_json(report: CvReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.as_dict(), indent=2))


def write_report_csv(report: CvReport, path: str | Path) -> None:
    """Flat per-fold metric table, one row per (fold, level)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["mode", "fold", "level", *_METRIC_FIELDS,
             "n_pred_events", "n_truth_spans", "epochs_run"]
        )
        for f in report.folds:
            for level in ("timestep", "event"):
                rep = getattr(f, level)
                writer.writerow(
                    [report.mode, f.key, level]
                    + [f"{getattr(rep, m):.6f}" for m in _METRIC_FIELDS]
                    + [f.n_pred_events, f.n_truth_spans, f.epochs_run]
                )


def write_confusion_csv(cm: ConfusionMatrix, path: str | Path) -> None:
    """Confusion matrix as a labeled CSV grid (rows truth, cols prediction)."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["truth\\pred", *CLASS_NAMES])
        for name, row in zip(CLASS_NAMES, cm.counts):
            writer.writerow([name, *row.tolist()])
