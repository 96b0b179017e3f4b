"""Loss, optimizer, training loop with early stopping, and inference helpers."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dataset import WINDOW_SIZE, WINDOW_STEP, Dataset
from ..errors import EmptyDatasetError, SeriesTooShortError
from ..gestures import N_CLASSES
from ..signals import LabeledSeries
from .layers import softmax
from .model import Model, ModelConfig


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters.

    ``batch_size`` is truncated to the dataset size when the data is
    smaller.  Training stops after ``max_epochs`` or once the validation
    loss has not improved for ``patience`` consecutive epochs, whichever
    comes first; the returned model carries the best-validation weights.
    """

    lr: float = 5e-4
    batch_size: int = 512
    max_epochs: int = 100
    patience: int = 30
    seed: int = 0
    val_fraction: float = 0.15

    def __post_init__(self) -> None:
        if self.patience > self.max_epochs:
            raise ValueError("patience must not exceed max_epochs")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")


def weighted_cross_entropy(
    logits: np.ndarray, labels: np.ndarray, class_weights: np.ndarray
) -> tuple[float, np.ndarray]:
    """Class-weighted softmax cross-entropy, normalized by the weight mass.

    loss = sum_i w[y_i] * (-log softmax(logits_i)[y_i]) / sum_i w[y_i]

    Returns the scalar loss and its gradient with respect to the logits.
    A batch whose labels all carry zero weight yields loss 0 and zero
    gradients.
    """
    labels = np.asarray(labels, dtype=np.int64)
    probs = softmax(logits, axis=1)
    wi = np.asarray(class_weights, dtype=np.float64)[labels]
    denom = wi.sum()
    if denom == 0.0:
        return 0.0, np.zeros_like(logits)
    rows = np.arange(len(labels))
    log_probs = np.log(np.maximum(probs[rows, labels], 1e-300))
    loss = float(-(wi * log_probs).sum() / denom)
    dlogits = probs * wi[:, None]
    dlogits[rows, labels] -= wi
    return loss, dlogits / denom


class AdamState:
    """First/second moment estimates plus the shared step counter."""

    def __init__(self, params: dict[str, np.ndarray],
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """One in-place Adam update with bias correction."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


def _stratified_split(
    labels: np.ndarray, val_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffled split; classes with a single window stay in train."""
    train_idx, val_idx = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = rng.permutation(idx)
        n_val = int(round(len(idx) * val_fraction))
        if len(idx) >= 2:
            n_val = max(1, min(n_val, len(idx) - 1))
        else:
            n_val = 0
        val_idx.append(idx[:n_val])
        train_idx.append(idx[n_val:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))


def _batch_losses(model: Model, x: np.ndarray, y: np.ndarray,
                  weights: np.ndarray, batch_size: int) -> float:
    """Weight-mass-normalized loss over a full set, streamed in batches."""
    total, mass = 0.0, 0.0
    for start in range(0, len(x), batch_size):
        xb = x[start : start + batch_size]
        yb = y[start : start + batch_size]
        logits = model.forward(xb)
        loss, _ = weighted_cross_entropy(logits, yb, weights)
        wmass = weights[yb].sum()
        total += loss * wmass
        mass += wmass
    return total / mass if mass > 0 else 0.0


def train(
    data: Dataset | tuple[np.ndarray, np.ndarray],
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    class_weights: np.ndarray | None = None,
    init_model: Model | None = None,
) -> tuple[Model, list[dict]]:
    """Train a classifier from scratch and return it with its history.

    ``data`` is either a :class:`Dataset` or an ``(x, y)`` pair with
    ``x`` shaped (n, channels, window).  The validation split is stratified
    by class.  Per-channel input statistics are computed on the training
    portion and frozen into the model.  Fully deterministic for a given
    ``train_cfg.seed``.  Pass ``init_model`` to resume from existing
    weights (its standardizer is kept).

    History rows are ``{"epoch", "train_loss", "val_loss"}`` per epoch run.
    """
    if isinstance(data, Dataset):
        if len(data) == 0:
            raise EmptyDatasetError("no windows to train on")
        x = data.stacked_values()
        y = data.labels()
        weights = data.class_weights if class_weights is None else class_weights
    else:
        x, y = data
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if len(x) == 0:
            raise EmptyDatasetError("no windows to train on")
        if class_weights is None:
            from ..dataset import class_weights as derive_weights

            weights = derive_weights(y)
        else:
            weights = class_weights
    weights = np.asarray(weights, dtype=np.float64)

    rng = np.random.default_rng(train_cfg.seed)
    train_idx, val_idx = _stratified_split(y, train_cfg.val_fraction, rng)
    x_train, y_train = x[train_idx], y[train_idx]
    x_val, y_val = x[val_idx], y[val_idx]

    if init_model is not None:
        # resuming: keep the loaded parameters and frozen standardizer
        model = init_model
    else:
        model = Model(config=model_cfg, seed=train_cfg.seed)
        # after per-window centering the channel means are exactly 0; the
        # scale is the average within-window deviation of the training set
        std = np.sqrt(x_train.var(axis=2).mean(axis=0))
        model.set_standardizer(np.zeros(x.shape[1]), std)

    params = model.parameters()
    state = AdamState(params)
    batch_size = min(train_cfg.batch_size, len(x_train))

    best_val = np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    best_epoch = 0
    stale = 0
    history: list[dict] = []

    for epoch in range(1, train_cfg.max_epochs + 1):
        order = rng.permutation(len(x_train))
        epoch_loss, epoch_mass = 0.0, 0.0
        for start in range(0, len(order), batch_size):
            sel = order[start : start + batch_size]
            xb, yb = x_train[sel], y_train[sel]
            logits, cache = model._forward_full(xb)
            loss, dlogits = weighted_cross_entropy(logits, yb, weights)
            grads = model.backward(dlogits, cache)
            adam_step(params, grads, state, train_cfg.lr)
            wmass = weights[yb].sum()
            epoch_loss += loss * wmass
            epoch_mass += wmass
        train_loss = epoch_loss / epoch_mass if epoch_mass else 0.0

        if len(x_val):
            val_loss = _batch_losses(model, x_val, y_val, weights, batch_size)
        else:
            val_loss = train_loss
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})

        if val_loss < best_val - 1e-12:
            best_val = val_loss
            best_params = {k: v.copy() for k, v in params.items()}
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= train_cfg.patience:
                break

    model.set_parameters(best_params)
    model.meta = {
        "epochs_run": len(history),
        "best_epoch": best_epoch,
        "best_val_loss": float(best_val),
    }
    return model, history


def predict_windows(model: Model, x: np.ndarray, batch_size: int = 512) -> np.ndarray:
    """Argmax class per window, evaluated in batches."""
    preds = []
    for start in range(0, len(x), batch_size):
        logits = model.forward(x[start : start + batch_size])
        preds.append(np.argmax(logits, axis=1))
    return np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)


def extract_window_matrix(
    series: LabeledSeries, size: int = WINDOW_SIZE, step: int = WINDOW_STEP
) -> np.ndarray:
    """All sliding windows of a series as one (n, 2, size) array."""
    n = len(series)
    if n < size:
        raise SeriesTooShortError(f"series has {n} samples, window needs {size}")
    values = series.values()
    n_windows = (n - size) // step + 1
    sc, sl = values.strides
    view = np.lib.stride_tricks.as_strided(
        values,
        shape=(n_windows, 2, size),
        strides=(sl * step, sc, sl),
        writeable=False,
    )
    return view


def predict_timesteps(
    model: Model, series: LabeledSeries, batch_size: int = 512
) -> np.ndarray:
    """One class code per sliding-window position of a series.

    Output index k corresponds to the window ending at sample
    ``WINDOW_SIZE - 1 + k * WINDOW_STEP``.
    """
    windows = extract_window_matrix(series, model.config.window, WINDOW_STEP)
    return predict_windows(model, windows, batch_size)


def window_end_times(series: LabeledSeries, n_steps: int) -> np.ndarray:
    """Timestamps of the window end samples for each prediction step."""
    idx = WINDOW_SIZE - 1 + WINDOW_STEP * np.arange(n_steps)
    return series.t[idx]


def step_labels(series: LabeledSeries, size: int = WINDOW_SIZE,
                step: int = WINDOW_STEP) -> np.ndarray:
    """Ground-truth label per prediction step (label of each window end)."""
    return np.asarray(series.labels[size - 1 :: step], dtype=np.int64)


def write_history(history: list[dict], path: str | Path) -> None:
    """Training history as CSV with columns epoch, train_loss, val_loss."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["epoch", "train_loss", "val_loss"])
        writer.writeheader()
        writer.writerows(history)
