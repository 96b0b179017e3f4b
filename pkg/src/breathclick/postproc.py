"""Time-step prediction optimization and event-level gesture emission.

Raw per-window predictions are noisy: a single gesture yields a run of
non-null predictions that may contain outliers, partial-gesture confusions
(a triple click looks like a single, then a double, while the window slides
over it), and stray nulls.  Three strategies clean the sequence in one
left-to-right pass:

1. **Low-pass**: a non-null prediction flanked by nulls on both sides is an
   outlier and is nulled.  Its dual, a single null inside a run, is always
   filled from the following prediction (independent of the strategy flags).
2. **Front-follows-back**: inside a run, the transitions single->double
   (2->3), double->triple (3->4), and single->SOS (2->1) rewrite everything
   before the transition to the later, more complete gesture.
3. **Majority rule**: when a run closes (the prediction returns to null),
   the whole run is rewritten to its majority code; ties resolve to the
   tied code seen latest.

A gesture *event* is emitted exactly when a non-null run closes, carrying
the majority vote of the closed run; this adds no latency beyond the single
closing-null step.  The streaming form keeps only a 10-slot buffer of recent
predictions, with run statistics tracked in O(classes) memory, so event
decisions are exact for arbitrarily long runs; the rewritten per-step trace
is exact for runs that fit the buffer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gestures import N_CLASSES, GestureKind

BUFFER_SIZE = 10

# (previous, current) code pairs that trigger the front-follows-back rewrite
FRONT_FOLLOWS_BACK = {(2, 3), (3, 4), (2, 1)}

# Prediction step k covers the window ending at sample 99 + 5k at 20 Hz.
STEP_SECONDS = 0.25
STEP_OFFSET_SECONDS = 4.95


@dataclass(frozen=True)
class GestureEvent:
    """One completed gesture: class plus its prediction-step span (inclusive)."""

    kind: GestureKind
    start_step: int
    end_step: int
    t_start: float
    t_end: float

    def __post_init__(self) -> None:
        if self.kind == GestureKind.NULL:
            raise ValueError("events are non-null by definition")
        if self.start_step > self.end_step:
            raise ValueError("event must span at least one step")


def _step_time(step: int, step_seconds: float, offset: float) -> float:
    return offset + step * step_seconds


class _RunState:
    """Majority-vote bookkeeping for the currently open non-null run.

    Holds per-class counts and the last step each class was seen, so the
    majority (with latest-occurrence tie-break) of a run of any length is
    available in O(1) memory.
    """

    __slots__ = ("start", "counts", "last_seen")

    def __init__(self, start: int):
        self.start = start
        self.counts = [0] * N_CLASSES
        self.last_seen = [-1] * N_CLASSES

    def add(self, code: int, step: int) -> None:
        self.counts[code] += 1
        self.last_seen[code] = step

    def overwrite(self, code: int, step: int) -> None:
        """The whole run so far (including this step) now carries ``code``."""
        total = sum(self.counts) + 1
        self.counts = [0] * N_CLASSES
        self.last_seen = [-1] * N_CLASSES
        self.counts[code] = total
        self.last_seen[code] = step

    def majority(self) -> int:
        best, best_count, best_seen = 0, -1, -1
        for code in range(1, N_CLASSES):
            count = self.counts[code]
            if count > best_count or (count == best_count and self.last_seen[code] > best_seen):
                if count > 0:
                    best, best_count, best_seen = code, count, self.last_seen[code]
        return best

    @property
    def length(self) -> int:
        return sum(self.counts)


def majority_vote(codes) -> int:
    """Majority code of a run; ties break to the latest-occurring tied code."""
    state = _RunState(0)
    for step, code in enumerate(codes):
        state.add(int(code), step)
    return state.majority()


def optimize(
    seq,
    strategy1: bool = True,
    strategy2: bool = True,
    strategy3: bool = True,
) -> np.ndarray:
    """Single left-to-right cleanup pass over a prediction sequence.

    Strategies apply in order (low-pass, front-follows-back, majority) at
    each position; the null-sandwich fill runs unconditionally, so with all
    flags off it is the only change.  Length is always preserved and only
    positions inside or directly adjacent to non-null runs are touched.
    """
    y = np.asarray(seq, dtype=np.int64).copy()
    _scan(y, strategy1, strategy2, strategy3, events=None)
    return y


def lowpass(seq) -> np.ndarray:
    """Strategy 1 only: remove non-null singletons, fill null singletons."""
    return optimize(seq, True, False, False)


def front_follows_back(seq) -> np.ndarray:
    """Strategy 2 only: rewrite partial-gesture prefixes to the later code."""
    return optimize(seq, False, True, False)


def majority_rule(seq) -> np.ndarray:
    """Strategy 3 only: rewrite each closed run to its majority code."""
    return optimize(seq, False, False, True)


def optimize_with_events(
    seq,
    strategy1: bool = True,
    strategy2: bool = True,
    strategy3: bool = True,
    step_seconds: float = STEP_SECONDS,
    offset_seconds: float = STEP_OFFSET_SECONDS,
) -> tuple[np.ndarray, list[GestureEvent]]:
    """Batch pass returning both the cleaned sequence and close-time events.

    Events fire at every non-null -> null transition seen during the pass
    (exactly what the streaming form emits), which can differ from
    :func:`eventize` of the final sequence when a filled null merges two
    runs into one.
    """
    y = np.asarray(seq, dtype=np.int64).copy()
    events: list[GestureEvent] = []
    _scan(y, strategy1, strategy2, strategy3, events,
          step_seconds=step_seconds, offset_seconds=offset_seconds)
    return y, events


def _scan(y: np.ndarray, s1: bool, s2: bool, s3: bool,
          events: list[GestureEvent] | None,
          step_seconds: float = STEP_SECONDS,
          offset_seconds: float = STEP_OFFSET_SECONDS) -> None:
    """The shared pass; mutates ``y`` in place, optionally collecting events."""
    run: _RunState | None = None
    n = len(y)
    for i in range(n):
        cur = int(y[i])
        if cur != 0:
            if i >= 2 and y[i - 1] == 0 and y[i - 2] != 0:
                # unconditional null-sandwich fill; starts a fresh run at i-1
                y[i - 1] = cur
                run = _RunState(i - 1)
                run.add(cur, i - 1)
            if run is None:
                run = _RunState(i)
            prev = int(y[i - 1]) if i >= 1 else 0
            if s2 and (prev, cur) in FRONT_FOLLOWS_BACK:
                y[run.start : i + 1] = cur
                run.overwrite(cur, i)
            else:
                run.add(cur, i)
        else:
            if s1 and i >= 2 and y[i - 1] != 0 and y[i - 2] == 0:
                # isolated non-null singleton: noise, not a gesture
                y[i - 1] = 0
                run = None
            elif run is not None:
                maj = run.majority()
                if events is not None:
                    events.append(
                        GestureEvent(
                            kind=GestureKind(maj),
                            start_step=run.start,
                            end_step=i - 1,
                            t_start=_step_time(run.start, step_seconds, offset_seconds),
                            t_end=_step_time(i - 1, step_seconds, offset_seconds),
                        )
                    )
                if s3:
                    y[run.start : i] = maj
                run = None


@dataclass
class StreamUpdate:
    """Result of one streaming push: the corrected recent window and, when a
    run just closed, its gesture event."""

    view: tuple[int, ...]
    event: GestureEvent | None
    finalized: tuple[tuple[int, int], ...]


class StreamSmoother:
    """Real-time form of :func:`optimize` over a fixed 10-slot buffer.

    Push one raw prediction per step.  The smoother rewrites the buffered
    recent predictions exactly like the batch pass and emits a
    :class:`GestureEvent` at the step where a run closes (the first null
    after it).  Majority votes use run statistics, not just the buffer, so
    events match the batch pass for runs of any length; the corrected
    per-step values match the batch pass whenever the run fits the buffer.

    ``push`` also reports slots that just left the buffer; their values are
    final.  Call ``flush`` at end of stream to finalize the remainder.
    """

    def __init__(
        self,
        strategy1: bool = True,
        strategy2: bool = True,
        strategy3: bool = True,
        buffer_size: int = BUFFER_SIZE,
        step_seconds: float = STEP_SECONDS,
        offset_seconds: float = STEP_OFFSET_SECONDS,
    ):
        self.s1 = strategy1
        self.s2 = strategy2
        self.s3 = strategy3
        self.buffer_size = buffer_size
        self.step_seconds = step_seconds
        self.offset_seconds = offset_seconds
        self._steps: list[int] = []  # absolute step per buffer slot
        self._codes: list[int] = []
        self._next_step = 0
        self._run: _RunState | None = None

    def _get(self, step: int) -> int:
        pos = step - self._steps[0] if self._steps else -1
        if 0 <= pos < len(self._codes):
            return self._codes[pos]
        return 0

    def _set(self, step: int, code: int) -> None:
        pos = step - self._steps[0] if self._steps else -1
        if 0 <= pos < len(self._codes):
            self._codes[pos] = code

    def _set_range(self, start: int, stop: int, code: int) -> None:
        for step in range(start, stop):
            self._set(step, code)

    def push(self, pred: int) -> StreamUpdate:
        """Process one raw prediction and return the corrected recent view."""
        i = self._next_step
        self._next_step += 1
        finalized: list[tuple[int, int]] = []
        self._steps.append(i)
        self._codes.append(int(pred))
        if len(self._steps) > self.buffer_size:
            finalized.append((self._steps.pop(0), self._codes.pop(0)))

        cur = int(pred)
        event: GestureEvent | None = None
        run = self._run
        if cur != 0:
            if i >= 2 and self._get(i - 1) == 0 and self._get(i - 2) != 0:
                self._set(i - 1, cur)
                run = _RunState(i - 1)
                run.add(cur, i - 1)
            if run is None:
                run = _RunState(i)
            prev = self._get(i - 1) if i >= 1 else 0
            if self.s2 and (prev, cur) in FRONT_FOLLOWS_BACK:
                self._set_range(max(run.start, self._steps[0]), i + 1, cur)
                run.overwrite(cur, i)
            else:
                run.add(cur, i)
        else:
            if self.s1 and i >= 2 and self._get(i - 1) != 0 and self._get(i - 2) == 0:
                self._set(i - 1, 0)
                run = None
            elif run is not None:
                maj = run.majority()
                event = GestureEvent(
                    kind=GestureKind(maj),
                    start_step=run.start,
                    end_step=i - 1,
                    t_start=_step_time(run.start, self.step_seconds, self.offset_seconds),
                    t_end=_step_time(i - 1, self.step_seconds, self.offset_seconds),
                )
                if self.s3:
                    self._set_range(max(run.start, self._steps[0]), i, maj)
                run = None
        self._run = run
        return StreamUpdate(
            view=tuple(self._codes), event=event, finalized=tuple(finalized)
        )

    def flush(self) -> tuple[tuple[int, int], ...]:
        """Finalize and return all remaining buffered (step, code) pairs."""
        out = tuple(zip(self._steps, self._codes))
        self._steps.clear()
        self._codes.clear()
        self._run = None
        return out


def smooth_stream(
    seq,
    strategy1: bool = True,
    strategy2: bool = True,
    strategy3: bool = True,
    buffer_size: int = BUFFER_SIZE,
) -> tuple[np.ndarray, list[GestureEvent]]:
    """Replay a sequence through the streaming smoother.

    Returns the finalized corrected sequence and the events in emission
    order; the independent batch counterpart is :func:`optimize_with_events`.
    """
    smoother = StreamSmoother(strategy1, strategy2, strategy3, buffer_size)
    out = np.zeros(len(seq), dtype=np.int64)
    events: list[GestureEvent] = []
    for code in seq:
        update = smoother.push(int(code))
        for step, value in update.finalized:
            out[step] = value
        if update.event is not None:
            events.append(update.event)
    for step, value in smoother.flush():
        out[step] = value
    return out, events


def eventize(
    seq,
    step_seconds: float = STEP_SECONDS,
    offset_seconds: float = STEP_OFFSET_SECONDS,
) -> list[GestureEvent]:
    """One event per maximal non-null run of a (typically cleaned) sequence.

    The event class is the majority vote of the run with the latest-occurring
    code winning ties.
    """
    y = np.asarray(seq, dtype=np.int64)
    events: list[GestureEvent] = []
    start = None
    for i, code in enumerate(y):
        if code != 0 and start is None:
            start = i
        elif code == 0 and start is not None:
            events.append(_run_event(y, start, i, step_seconds, offset_seconds))
            start = None
    if start is not None:
        events.append(_run_event(y, start, len(y), step_seconds, offset_seconds))
    return events


def _run_event(y: np.ndarray, start: int, stop: int,
               step_seconds: float, offset_seconds: float) -> GestureEvent:
    maj = majority_vote(y[start:stop])
    return GestureEvent(
        kind=GestureKind(maj),
        start_step=start,
        end_step=stop - 1,
        t_start=_step_time(start, step_seconds, offset_seconds),
        t_end=_step_time(stop - 1, step_seconds, offset_seconds),
    )


def spans_from_steps(seq) -> list[tuple[int, int, int]]:
    """Maximal non-null runs as half-open (start, end, majority_code) spans."""
    return [(e.start_step, e.end_step + 1, int(e.kind)) for e in eventize(seq)]
