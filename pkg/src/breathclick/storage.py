"""File formats: JSON-Lines series and event files, sidecar span indexes,
and run manifests.

Every file opens with a header record carrying ``format`` and ``version``
so downstream commands can refuse incompatible inputs.  Series files are
the contract between ``gen`` and everything downstream: one record per
sample with fields ``subject, scenario, t, magnitude, phase, label``, plus
a ``<name>.spans.json`` sidecar indexing the gesture spans.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import FormatVersionMismatchError
from .gestures import GestureKind
from .postproc import GestureEvent
from .signals import LabeledSeries, Scenario

SERIES_FORMAT = "breathclick-series"
EVENTS_FORMAT = "breathclick-events"
FORMAT_VERSION = 1


def _check_header(header: dict, expected_format: str, path: Path) -> None:
    if header.get("format") != expected_format or header.get("version") != FORMAT_VERSION:
        raise FormatVersionMismatchError(
            f"{path} is not a version-{FORMAT_VERSION} {expected_format} file"
        )


def series_filename(series: LabeledSeries) -> str:
    stem = f"{series.subject_id}_{series.scenario.value}"
    if series.augment:
        stem += f"_{series.augment.replace('+', 'p').replace('-', 'm')}"
    return stem + ".jsonl"


def save_series(series: LabeledSeries, path: str | Path) -> None:
    """Write a series as JSONL plus its ``.spans.json`` sidecar index."""
    path = Path(path)
    header = {
        "format": SERIES_FORMAT,
        "version": FORMAT_VERSION,
        "subject": series.subject_id,
        "scenario": series.scenario.value,
        "n_samples": len(series),
        "augment": series.augment,
    }
    with path.open("w") as fh:
        fh.write(json.dumps(header) + "\n")
        for i in range(len(series)):
            fh.write(
                json.dumps(
                    {
                        "subject": series.subject_id,
                        "scenario": series.scenario.value,
                        "t": float(series.t[i]),
                        "magnitude": float(series.magnitude[i]),
                        "phase": float(series.phase[i]),
                        "label": int(series.labels[i]),
                    }
                )
                + "\n"
            )
    sidecar = {
        "format": SERIES_FORMAT + "-spans",
        "version": FORMAT_VERSION,
        "spans": [
            {"start": s, "end": e, "kind": int(k)} for s, e, k in series.gesture_spans
        ],
    }
    path.with_suffix(".spans.json").write_text(json.dumps(sidecar, indent=2))


def load_series(path: str | Path) -> LabeledSeries:
    """Read a series written by :func:`save_series` (sidecar optional)."""
    path = Path(path)
    with path.open() as fh:
        try:
            header = json.loads(fh.readline())
        except json.JSONDecodeError:
            header = {}
        _check_header(header, SERIES_FORMAT, path)
        t, magnitude, phase, labels = [], [], [], []
        for line in fh:
            rec = json.loads(line)
            t.append(rec["t"])
            magnitude.append(rec["magnitude"])
            phase.append(rec["phase"])
            labels.append(rec["label"])

    spans: list[tuple[int, int, GestureKind]] = []
    sidecar_path = path.with_suffix(".spans.json")
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text())
        spans = [
            (s["start"], s["end"], GestureKind(s["kind"])) for s in sidecar["spans"]
        ]
    return LabeledSeries(
        subject_id=header["subject"],
        scenario=Scenario(header["scenario"]),
        t=np.array(t, dtype=np.float64),
        magnitude=np.array(magnitude, dtype=np.float64),
        phase=np.array(phase, dtype=np.float64),
        labels=np.array(labels, dtype=np.int8),
        gesture_spans=spans,
        augment=header.get("augment"),
    )


def load_series_dir(directory: str | Path) -> list[LabeledSeries]:
    """All series files in a directory, sorted by filename."""
    directory = Path(directory)
    return [load_series(p) for p in sorted(directory.glob("*.jsonl"))]


def save_events(events: list[GestureEvent], path: str | Path, meta: dict | None = None) -> None:
    """Events as JSONL: {kind, start_step, end_step, t_start, t_end}."""
    header = {"format": EVENTS_FORMAT, "version": FORMAT_VERSION, **(meta or {})}
    with Path(path).open("w") as fh:
        fh.write(json.dumps(header) + "\n")
        for e in events:
            fh.write(
                json.dumps(
                    {
                        "kind": int(e.kind),
                        "start_step": e.start_step,
                        "end_step": e.end_step,
                        "t_start": e.t_start,
                        "t_end": e.t_end,
                    }
                )
                + "\n"
            )


def load_events(path: str | Path) -> list[GestureEvent]:
    path = Path(path)
    with path.open() as fh:
        header = json.loads(fh.readline())
        _check_header(header, EVENTS_FORMAT, path)
        out = []
        for line in fh:
            rec = json.loads(line)
            out.append(
                GestureEvent(
                    kind=GestureKind(rec["kind"]),
                    start_step=rec["start_step"],
                    end_step=rec["end_step"],
                    t_start=rec["t_start"],
                    t_end=rec["t_end"],
                )
            )
    return out


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path: str | Path, payload: dict) -> str:
    """Write a manifest deterministically and return its content hash.

    The payload must already be JSON-serializable; keys are sorted so the
    same inputs always produce byte-identical output.
    """
    text = json.dumps(payload, indent=2, sort_keys=True)
    Path(path).write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()
