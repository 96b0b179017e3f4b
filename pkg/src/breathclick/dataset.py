"""Windowing, class weighting, cross-validation splits, and persistence.

A classifier input is a fixed 100-sample, two-channel window cut from a
labeled series every 5 samples.  Each window is labeled by its final
sample, which aligns a window's prediction with "now" when streaming.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptyLabelsError,
    FormatVersionMismatchError,
    SeriesTooShortError,
    UnknownKeyError,
)
from .gestures import N_CLASSES, GestureKind
from .signals import LabeledSeries, Scenario

WINDOW_SIZE = 100
WINDOW_STEP = 5

DATASET_FORMAT = "breathclick-dataset"
DATASET_VERSION = 1


@dataclass
class Window:
    """One classifier input: values (2, 100) = (magnitude, phase) rows."""

    values: np.ndarray
    label: GestureKind
    subject_id: str
    scenario: Scenario
    end_index: int

    def __post_init__(self) -> None:
        if self.values.shape != (2, WINDOW_SIZE):
            raise ValueError(f"window values must be (2, {WINDOW_SIZE})")


@dataclass
class Dataset:
    """A bag of windows plus the class weights derived from their labels."""

    windows: list[Window]
    class_weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.class_weights is None:
            labels = [int(w.label) for w in self.windows]
            self.class_weights = (
                class_weights(labels) if labels else np.zeros(N_CLASSES)
            )

    def __len__(self) -> int:
        return len(self.windows)

    def labels(self) -> np.ndarray:
        return np.array([int(w.label) for w in self.windows], dtype=np.int64)

    def stacked_values(self) -> np.ndarray:
        """All window values as one (n, 2, 100) array."""
        if not self.windows:
            return np.zeros((0, 2, WINDOW_SIZE))
        return np.stack([w.values for w in self.windows])


@dataclass
class Split:
    """A train/test partition keyed by a held-out subject or scenario."""

    train: Dataset
    test: Dataset
    held_out: str | Scenario


def window_count(length: int, size: int = WINDOW_SIZE, step: int = WINDOW_STEP) -> int:
    """Number of windows a series of ``length`` samples yields."""
    if length < size:
        return 0
    return (length - size) // step + 1


def slide_windows(
    series: LabeledSeries, size: int = WINDOW_SIZE, step: int = WINDOW_STEP
) -> list[Window]:
    """Cut overlapping windows at offsets 0, step, 2*step, ...

    Each window is labeled by the label of its last sample.

    Raises
    ------
    SeriesTooShortError
        If the series is shorter than one window.
    """
    n = len(series)
    if n < size:
        raise SeriesTooShortError(f"series has {n} samples, window needs {size}")
    values = series.values()
    out = []
    for start in range(0, n - size + 1, step):
        end_index = start + size - 1
        out.append(
            Window(
                values=values[:, start : start + size].copy(),
                label=GestureKind(int(series.labels[end_index])),
                subject_id=series.subject_id,
                scenario=series.scenario,
                end_index=end_index,
            )
        )
    return out


def class_weights(labels) -> np.ndarray:
    """Inverse-frequency class weights: w_c = N / (K_present * n_c).

    ``K_present`` counts classes that actually occur; absent classes get
    weight 0.  Under a balanced label distribution every weight is 1, and
    sum_c w_c * n_c == N always holds.

    Raises
    ------
    EmptyLabelsError
        If no labels are given.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise EmptyLabelsError("cannot derive class weights from zero labels")
    counts = np.bincount(labels, minlength=N_CLASSES).astype(np.float64)
    present = counts > 0
    k_present = int(present.sum())
    weights = np.zeros(N_CLASSES)
    weights[present] = labels.size / (k_present * counts[present])
    return weights


def _split_by(windows: list[Window], held_out, key) -> Split:
    test = [w for w in windows if key(w) == held_out]
    if not test:
        raise UnknownKeyError(f"no windows for held-out key {held_out!r}")
    train = [w for w in windows if key(w) != held_out]
    return Split(train=Dataset(train), test=Dataset(test), held_out=held_out)


def split_lopo(windows: list[Window], subject: str) -> Split:
    """Leave-one-person-out: hold out every window of one subject."""
    return _split_by(windows, subject, key=lambda w: w.subject_id)


def split_loso(windows: list[Window], scenario: Scenario) -> Split:
    """Leave-one-scenario-out: hold out every window of one scenario."""
    return _split_by(windows, scenario, key=lambda w: w.scenario)


def save_dataset(dataset: Dataset, path: str | Path, seed: int | None = None) -> None:
    """Write a dataset as JSON-Lines with a version header record."""
    path = Path(path)
    with path.open("w") as fh:
        header = {
            "format": DATASET_FORMAT,
            "version": DATASET_VERSION,
            "generator": "breathclick",
            "seed": seed,
            "n_windows": len(dataset),
        }
        fh.write(json.dumps(header) + "\n")
        for w in dataset.windows:
            record = {
                "values": w.values.tolist(),
                "label": int(w.label),
                "subject": w.subject_id,
                "scenario": w.scenario.value,
                "end_index": w.end_index,
            }
            fh.write(json.dumps(record) + "\n")


def load_dataset(path: str | Path) -> Dataset:
    """Read a dataset written by :func:`save_dataset`.

    Raises
    ------
    FormatVersionMismatchError
        If the header is missing or carries an unsupported version.
    """
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
        try:
            header = json.loads(first) if first else {}
        except json.JSONDecodeError:
            header = {}
        if header.get("format") != DATASET_FORMAT or header.get("version") != DATASET_VERSION:
            raise FormatVersionMismatchError(
                f"{path} is not a version-{DATASET_VERSION} {DATASET_FORMAT} file"
            )
        windows = []
        for line in fh:
            rec = json.loads(line)
            windows.append(
                Window(
                    values=np.array(rec["values"], dtype=np.float64),
                    label=GestureKind(rec["label"]),
                    subject_id=rec["subject"],
                    scenario=Scenario(rec["scenario"]),
                    end_index=rec["end_index"],
                )
            )
    return Dataset(windows)
