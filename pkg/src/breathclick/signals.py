"""Synthetic bio-impedance breathing signals with per-sample gesture labels.

The sensing principle: lung air volume modulates upper-body bio-impedance,
inhalation raising the magnitude and exhalation lowering it back toward the
baseline.  One breath is rendered as a half-sine bump above the subject's
baseline impedance; gestures are sequences of deep and fast breaths embedded
in regular breathing.  Each sample carries a magnitude (ohms) and a phase
(degrees) channel at a fixed 20 Hz rate.

Scenario noise magnitudes are calibration knobs, not measured ground truth;
they are chosen so that walking is clearly noisier than sitting or lying
while gestures remain recognizable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator

import numpy as np

from .errors import NullGestureError, ZeroCurrentError
from .gestures import GESTURE_TEMPLATES, BreathKind, GestureKind

SAMPLE_RATE_HZ = 20.0
DT = 1.0 / SAMPLE_RATE_HZ

# Phase channel synthesis: resting phase plus a scaled copy of the magnitude
# deviation.  The phase channel is deliberately lower-SNR than the magnitude
# channel (extra jitter is added per scenario in synth_session).
PHASE_BASELINE_DEG = -5.0
PHASE_COUPLING = 0.2


@dataclass(frozen=True)
class Sample:
    """One bio-impedance reading: time (s), magnitude (ohms), phase (deg)."""

    t: float
    magnitude: float
    phase: float


@dataclass(frozen=True)
class AfeConfig:
    """Analog front-end stimulus settings and the known reference impedance.

    The peak-to-peak stimulus amplitude is capped at 50 mV, which keeps the
    body current below the 0.6 mA safety limit at 100 kHz.
    """

    stimulus_freq: float = 100_000.0
    stimulus_vpp: float = 0.05
    z_known: complex = 500.0 + 0.0j

    def __post_init__(self) -> None:
        if self.stimulus_vpp > 0.05:
            raise ValueError(
                f"stimulus_vpp={self.stimulus_vpp} V exceeds the 0.05 V safety bound"
            )


def afe_ratio_measurement(
    i_known: complex, i_test: complex, z_known: complex
) -> complex:
    """Impedance of the object under test via the ratio measurement method.

    The front-end first drives a known precision resistor ``z_known`` and
    records the current ``i_known``, then applies the same stimulus to the
    test object and records ``i_test``.  The unknown impedance follows from
    the current ratio::

        z_test = (i_known / i_test) * z_known

    Raises
    ------
    ZeroCurrentError
        If the test current is exactly zero.
    """
    if abs(i_test) == 0.0:
        raise ZeroCurrentError("test current is zero; cannot form current ratio")
    return (i_known / i_test) * z_known


def magnitude_phase(z: complex) -> tuple[float, float]:
    """Decompose a complex impedance into (magnitude ohms, phase degrees)."""
    return abs(z), math.degrees(math.atan2(z.imag, z.real))


@dataclass(frozen=True)
class SubjectProfile:
    """Per-subject signal parameters.

    Baseline impedance and breath amplitude differ between people (body fat,
    electrode placement), which is exactly the variation the augmentation
    transforms later simulate on top of this.

    Durations are expressed in seconds and are snapped to the 20 Hz sample
    grid during synthesis.  ``deep_scale`` multiplies the regular
    peak-to-trough amplitude for deep breaths.
    """

    subject_id: str
    baseline_z: float = 500.0
    breath_amp: float = 2.0
    deep_scale: float = 2.5
    regular_period: float = 3.5
    deep_duration: float = 2.65
    fast_duration: float = 0.9
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.deep_scale <= 1.0:
            raise ValueError("deep_scale must be > 1")
        if not self.fast_duration < self.regular_period:
            raise ValueError("fast_duration must be shorter than regular_period")
        if min(self.baseline_z, self.breath_amp) <= 0.0:
            raise ValueError("baseline_z and breath_amp must be positive")


class Scenario(Enum):
    """Recording condition; each carries its own noise profile."""

    SITTING = "sitting"
    LYING = "lying"
    WALKING = "walking"

    @property
    def drift_amp(self) -> float:
        """Amplitude (ohms) of the slow baseline drift."""
        return _SCENARIO_NOISE[self][0]

    @property
    def jitter_sigma(self) -> float:
        """Standard deviation (ohms) of per-sample Gaussian jitter."""
        return _SCENARIO_NOISE[self][1]


# (drift amplitude ohms, jitter sigma ohms).  Walking carries motion noise
# well above the static postures; keep walking sigma strictly the largest.
_SCENARIO_NOISE: dict[Scenario, tuple[float, float]] = {
    Scenario.SITTING: (0.30, 0.05),
    Scenario.LYING: (0.35, 0.06),
    Scenario.WALKING: (1.20, 0.25),
}


def set_scenario_noise(overrides: dict[Scenario, tuple[float, float]]) -> None:
    """Override the process-wide scenario noise table (calibration knobs)."""
    for scenario, (drift, jitter) in overrides.items():
        _SCENARIO_NOISE[Scenario(scenario)] = (float(drift), float(jitter))


@dataclass
class LabeledSeries:
    """One subject/scenario recording with per-sample gesture labels.

    ``gesture_spans`` holds half-open ``(start, end, kind)`` index ranges;
    every non-null label lies inside exactly one span, spans are sorted and
    non-overlapping.
    """

    subject_id: str
    scenario: Scenario
    t: np.ndarray
    magnitude: np.ndarray
    phase: np.ndarray
    labels: np.ndarray
    gesture_spans: list[tuple[int, int, GestureKind]] = field(default_factory=list)
    augment: str | None = None

    def __post_init__(self) -> None:
        n = len(self.t)
        if not (len(self.magnitude) == len(self.phase) == len(self.labels) == n):
            raise ValueError("all channels and labels must share one length")

    def __len__(self) -> int:
        return len(self.t)

    def iter_samples(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield Sample(float(self.t[i]), float(self.magnitude[i]), float(self.phase[i]))

    def values(self) -> np.ndarray:
        """Channels-first view of the signal, shape (2, n): magnitude, phase."""
        return np.stack([self.magnitude, self.phase])


def _breath_wave(amp: float, duration: float) -> np.ndarray:
    """Magnitude deviation of one inhale/exhale: a half-sine bump.

    Rises from 0 to ``amp`` and falls back within ``duration`` seconds,
    sampled on the 20 Hz grid (at least 3 samples).
    """
    n = max(3, round(duration * SAMPLE_RATE_HZ))
    t = np.arange(n) * DT
    return amp * np.sin(math.pi * t / (n * DT))


def _breath_params(
    kind: BreathKind, profile: SubjectProfile
) -> tuple[float, float]:
    """(amplitude, duration) for one breath of the given kind."""
    if kind is BreathKind.DEEP:
        return profile.breath_amp * profile.deep_scale, profile.deep_duration
    if kind is BreathKind.FAST:
        return profile.breath_amp, profile.fast_duration
    return profile.breath_amp, profile.regular_period


def synth_breath(kind: BreathKind, profile: SubjectProfile) -> np.ndarray:
    """Magnitude samples of a single breath cycle around the baseline.

    Deep breaths use ``breath_amp * deep_scale`` over ``deep_duration``;
    fast breaths keep the regular amplitude but compress the cycle into
    ``fast_duration``.
    """
    amp, duration = _breath_params(kind, profile)
    return profile.baseline_z + _breath_wave(amp, duration)


def synth_gesture(
    kind: GestureKind, profile: SubjectProfile
) -> tuple[np.ndarray, tuple[int, int, GestureKind]]:
    """Magnitude segment of one gesture plus its (start, end, kind) span.

    The segment concatenates the breath template of the gesture (for a
    single click: one deep breath followed by one fast breath).  The span
    covers the whole segment.

    Raises
    ------
    NullGestureError
        If asked to render the null class.
    """
    if kind == GestureKind.NULL:
        raise NullGestureError("the null class has no gesture waveform")
    parts = [synth_breath(b, profile) for b in GESTURE_TEMPLATES[kind]]
    seg = np.concatenate(parts)
    return seg, (0, len(seg), kind)


def gesture_duration(kind: GestureKind, profile: SubjectProfile) -> float:
    """Nominal duration in seconds of one gesture for this profile."""
    seg, _ = synth_gesture(kind, profile)
    return len(seg) * DT


def _drift(n: int, amp: float, rng: np.random.Generator) -> np.ndarray:
    """Slow baseline wander: two low-frequency sinusoids with random phase."""
    t = np.arange(n) * DT
    f1, f2 = rng.uniform(0.005, 0.02), rng.uniform(0.02, 0.05)
    p1, p2 = rng.uniform(0.0, 2.0 * math.pi, size=2)
    return amp * (np.sin(2 * math.pi * f1 * t + p1) + 0.5 * np.sin(2 * math.pi * f2 * t + p2))


def _smooth3(x: np.ndarray) -> np.ndarray:
    """3-tap moving average with edge passthrough."""
    y = x.copy()
    y[1:-1] = (x[:-2] + x[1:-1] + x[2:]) / 3.0
    return y


def synth_session(
    profile: SubjectProfile,
    scenario: Scenario,
    trials_per_gesture: int = 15,
) -> LabeledSeries:
    """Simulate one recording session of randomized gesture trials.

    Every non-null gesture is performed ``trials_per_gesture`` times in a
    seeded random order (the default of 15 yields 60 trials).  Consecutive
    gestures are separated by at least two regular breathing cycles, gesture
    durations are jittered by up to +/-20 percent around the profile values,
    and scenario noise (baseline drift plus Gaussian jitter) is superimposed
    on the clean waveform.

    The result is deterministic for a given (profile, scenario) pair,
    including the trial order and the noise.
    """
    if trials_per_gesture < 1:
        raise ValueError("trials_per_gesture must be >= 1")
    scenario_code = list(Scenario).index(scenario)
    rng = np.random.default_rng([profile.rng_seed, scenario_code])

    kinds = [k for k in GestureKind if k != GestureKind.NULL]
    order = np.repeat([int(k) for k in kinds], trials_per_gesture)
    rng.shuffle(order)

    chunks: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    spans: list[tuple[int, int, GestureKind]] = []
    pos = 0

    def add_regular(n_cycles: int) -> None:
        nonlocal pos
        for _ in range(n_cycles):
            wave = _breath_wave(
                profile.breath_amp * rng.uniform(0.85, 1.15),
                profile.regular_period * rng.uniform(0.9, 1.1),
            )
            chunks.append(wave)
            labels.append(np.zeros(len(wave), dtype=np.int8))
            pos += len(wave)

    add_regular(2)
    for code in order:
        kind = GestureKind(int(code))
        dur_scale = rng.uniform(0.8, 1.2)
        amp_scale = rng.uniform(0.9, 1.1)
        jittered = replace(
            profile,
            breath_amp=profile.breath_amp * amp_scale,
            deep_duration=profile.deep_duration * dur_scale,
            fast_duration=profile.fast_duration * dur_scale,
        )
        seg, _ = synth_gesture(kind, jittered)
        seg = seg - jittered.baseline_z  # keep as deviation; baseline added below
        chunks.append(seg)
        labels.append(np.full(len(seg), int(kind), dtype=np.int8))
        spans.append((pos, pos + len(seg), kind))
        pos += len(seg)
        add_regular(2 + int(rng.integers(0, 2)))

    dev = np.concatenate(chunks)
    label_arr = np.concatenate(labels)
    n = len(dev)

    magnitude = (
        profile.baseline_z
        + dev
        + _drift(n, scenario.drift_amp, rng)
        + rng.normal(0.0, scenario.jitter_sigma, size=n)
    )
    phase_noise = rng.normal(0.0, 2.0 * scenario.jitter_sigma, size=n)
    phase = _smooth3(PHASE_BASELINE_DEG + PHASE_COUPLING * dev + phase_noise)

    return LabeledSeries(
        subject_id=profile.subject_id,
        scenario=scenario,
        t=np.arange(n) * DT,
        magnitude=magnitude,
        phase=phase,
        labels=label_arr,
        gesture_spans=spans,
    )


def make_cohort(n_subjects: int = 8, master_seed: int = 0) -> list[SubjectProfile]:
    """Generate a cohort of subject profiles with realistic spread.

    Baselines, amplitudes, and timing all vary per subject so that
    leave-one-person-out folds actually test generalization.
    """
    rng = np.random.default_rng([master_seed, 0xC0F0])
    profiles = []
    for i in range(n_subjects):
        profiles.append(
            SubjectProfile(
                subject_id=f"s{i + 1:02d}",
                baseline_z=rng.uniform(430.0, 570.0),
                breath_amp=rng.uniform(1.6, 2.6),
                deep_scale=rng.uniform(2.0, 3.0),
                regular_period=rng.uniform(3.0, 4.0),
                deep_duration=2.65 * rng.uniform(0.85, 1.15),
                fast_duration=0.9 * rng.uniform(0.85, 1.15),
                rng_seed=int(rng.integers(0, 2**31 - 1)),
            )
        )
    return profiles
