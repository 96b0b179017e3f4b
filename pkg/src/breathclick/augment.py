"""Training-set augmentation: three noise transforms, fivefold expansion.

The transforms emulate the disturbances a wearable bio-impedance sensor
actually sees:

* ``shift`` (Z -> Z +/- delta): constant system bias from individual
  differences and electrode placement.
* ``scale_up`` / ``scale_down`` (Z -> Z^2 / Z_mean, Z -> sqrt(Z) *
  sqrt(Z_mean)): stronger or weaker breathing deviation around the session
  mean, as caused by lung capacity and breathing habits.
* ``gaussian`` (Z -> Z + N(mu, sigma^2)): random electrode-movement noise.

All transforms act on the magnitude channel only and preserve labels, spans,
and length.  ``augment_set`` applies all four variants next to the original,
expanding a dataset fivefold.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NonPositiveMagnitudeError
from .signals import LabeledSeries


@dataclass(frozen=True)
class AugmentConfig:
    """Knobs for ``augment_set``.

    The shift magnitude delta is drawn per series from ``delta_range``
    (ohms) with a random sign; ``gauss_mu``/``gauss_sigma`` parameterize the
    additive noise variant.  ``seed`` makes the expansion deterministic.
    """

    delta_range: tuple[float, float] = (1.0, 5.0)
    gauss_mu: float = 0.0
    gauss_sigma: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.gauss_sigma < 0:
            raise ValueError("gauss_sigma must be >= 0")


def _with_magnitude(series: LabeledSeries, magnitude: np.ndarray, tag: str) -> LabeledSeries:
    return replace(series, magnitude=magnitude, augment=tag)


def shift(series: LabeledSeries, delta: float, sign: int = 1) -> LabeledSeries:
    """Offset every magnitude by ``sign * delta`` ohms (phase untouched)."""
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    return _with_magnitude(
        series, series.magnitude + sign * delta, f"shift{sign * delta:+g}"
    )


def _require_positive(series: LabeledSeries) -> None:
    if np.any(series.magnitude <= 0.0):
        raise NonPositiveMagnitudeError(
            "scale transforms require strictly positive magnitudes"
        )


def scale_up(series: LabeledSeries) -> LabeledSeries:
    """Amplify deviations: Z -> Z^2 / Z_mean with Z_mean the series mean."""
    _require_positive(series)
    z_mean = float(series.magnitude.mean())
    return _with_magnitude(series, series.magnitude**2 / z_mean, "scale_up")


def scale_down(series: LabeledSeries) -> LabeledSeries:
    """Attenuate deviations: Z -> sqrt(Z) * sqrt(Z_mean)."""
    _require_positive(series)
    z_mean = float(series.magnitude.mean())
    return _with_magnitude(
        series, np.sqrt(series.magnitude) * np.sqrt(z_mean), "scale_down"
    )


def gaussian(
    series: LabeledSeries, mu: float, sigma: float, seed: int
) -> LabeledSeries:
    """Add i.i.d. normal noise N(mu, sigma^2) to the magnitude channel."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    rng = np.random.default_rng(seed)
    noise = rng.normal(mu, sigma, size=len(series)) if sigma > 0 else np.full(len(series), mu)
    return _with_magnitude(series, series.magnitude + noise, "gaussian")


def augment_set(
    dataset: list[LabeledSeries], config: AugmentConfig | None = None
) -> list[LabeledSeries]:
    """Fivefold expansion: original plus shift, scale up/down, gaussian.

    Output order is all originals first, then the four variants of each
    series.  Labels and spans are untouched, so the label histogram of the
    output is exactly five times that of the input.
    """
    if not dataset:
        raise ValueError("augment_set needs a non-empty dataset")
    cfg = config or AugmentConfig()
    rng = np.random.default_rng(cfg.seed)
    out = list(dataset)
    for series in dataset:
        delta = float(rng.uniform(*cfg.delta_range))
        sign = 1 if rng.random() < 0.5 else -1
        noise_seed = int(rng.integers(0, 2**31 - 1))
        out.append(shift(series, delta, sign))
        out.append(scale_up(series))
        out.append(scale_down(series))
        out.append(gaussian(series, cfg.gauss_mu, cfg.gauss_sigma, noise_seed))
    return out
