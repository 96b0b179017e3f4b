"""Breathing-gesture detection on bio-impedance signals.

A complete desk-scale pipeline: synthetic labeled signal generation, noise
augmentation, a from-scratch CNN/attention/LSTM classifier, streaming
prediction cleanup with event emission, and LOPO/LOSO cross-validation.
"""

from .gestures import BreathKind, GestureKind

__version__ = "0.1.0"

__all__ = ["GestureKind", "BreathKind", "__version__"]
