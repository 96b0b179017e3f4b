"""Gesture vocabulary: class codes, breath kinds, and gesture templates.

The integer codes are load-bearing: they are written to every dataset file,
compared by the prediction post-processor, and indexed into confusion
matrices.  Do not renumber them.
"""

from __future__ import annotations

from enum import Enum, IntEnum


class GestureKind(IntEnum):
    """Gesture classes. NULL means regular breathing / no gesture."""

    NULL = 0
    SOS = 1
    SINGLE_CLICK = 2
    DOUBLE_CLICK = 3
    TRIPLE_CLICK = 4


class BreathKind(Enum):
    """Building-block breath types used to compose gestures.

    DEEP is higher amplitude and longer than REGULAR; FAST is shorter
    than REGULAR at regular amplitude.
    """

    REGULAR = "regular"
    DEEP = "deep"
    FAST = "fast"


#: Breath sequence performed for each (non-null) gesture.
GESTURE_TEMPLATES: dict[GestureKind, tuple[BreathKind, ...]] = {
    GestureKind.SOS: (BreathKind.DEEP, BreathKind.FAST, BreathKind.DEEP),
    GestureKind.SINGLE_CLICK: (BreathKind.DEEP, BreathKind.FAST),
    GestureKind.DOUBLE_CLICK: (BreathKind.DEEP, BreathKind.FAST, BreathKind.FAST),
    GestureKind.TRIPLE_CLICK: (
        BreathKind.DEEP,
        BreathKind.FAST,
        BreathKind.FAST,
        BreathKind.FAST,
    ),
}

CLASS_NAMES: tuple[str, ...] = tuple(k.name.lower() for k in GestureKind)
N_CLASSES: int = len(GestureKind)
