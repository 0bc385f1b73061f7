"""Cascade click model simulation.

A simulated user scans the displayed list top-down, clicks each examined
document with a grade-dependent probability, and after a click stops
examining with a second grade-dependent probability. The three standard
instantiations (perfect, navigational, informational) are compiled in;
custom grade-to-probability maps can be supplied through experiment
configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backends

MAX_GRADE = 4

# ClickVector: boolean array, one entry per displayed slot.
ClickVector = np.ndarray

_clamp_warning_count = 0


def clamp_warning_count() -> int:
    """How many simulated grades fell outside the 0..4 parameter range."""
    return _clamp_warning_count


def reset_clamp_warnings() -> None:
    global _clamp_warning_count
    _clamp_warning_count = 0


@dataclass(frozen=True)
class ClickModelParams:
    """Per-grade click and stop probabilities over grades 0..4."""

    name: str
    p_click: np.ndarray
    p_stop: np.ndarray

    def __post_init__(self):
        for label, probs in (("p_click", self.p_click), ("p_stop", self.p_stop)):
            if probs.shape != (MAX_GRADE + 1,):
                raise ValueError(f"{label} must cover grades 0..{MAX_GRADE}")
            if np.any(probs < 0.0) or np.any(probs > 1.0):
                raise ValueError(f"{label} probabilities must lie in [0, 1]")

    @classmethod
    def from_maps(cls, name: str, p_click: dict, p_stop: dict) -> "ClickModelParams":
        """Build from grade->probability maps (JSON config form)."""
        click = np.zeros(MAX_GRADE + 1)
        stop = np.zeros(MAX_GRADE + 1)
        for target, mapping in ((click, p_click), (stop, p_stop)):
            for grade, prob in mapping.items():
                grade = int(grade)
                if not 0 <= grade <= MAX_GRADE:
                    raise ValueError(f"grade {grade} outside 0..{MAX_GRADE}")
                target[grade] = float(prob)
        return cls(name, click, stop)


def _params(name, click, stop):
    return ClickModelParams(name, np.array(click), np.array(stop))


PERFECT = _params("perfect", [0.0, 0.2, 0.4, 0.8, 1.0], [0.0, 0.0, 0.0, 0.0, 0.0])
NAVIGATIONAL = _params(
    "navigational", [0.05, 0.3, 0.5, 0.7, 0.95], [0.2, 0.3, 0.5, 0.7, 0.9]
)
INFORMATIONAL = _params(
    "informational", [0.4, 0.6, 0.7, 0.8, 0.9], [0.1, 0.2, 0.3, 0.4, 0.5]
)

CLICK_MODELS = {
    "perfect": PERFECT,
    "navigational": NAVIGATIONAL,
    "informational": INFORMATIONAL,
}


def simulate_clicks(
    params: ClickModelParams,
    relevances: np.ndarray,
    rng: np.random.Generator,
) -> ClickVector:
    """Simulate one cascade scan over the displayed relevance grades.

    Grades above 4 clamp to 4 (counted, see clamp_warning_count). Slots
    after a stopping click are unexamined and therefore unclicked.
    """
    global _clamp_warning_count
    grades = np.asarray(relevances, dtype=np.int64)
    out_of_range = int(np.count_nonzero((grades < 0) | (grades > MAX_GRADE)))
    if out_of_range:
        _clamp_warning_count += out_of_range
        grades = np.clip(grades, 0, MAX_GRADE)
    draws = rng.random((grades.shape[0], 2))
    return backends.cascade_clicks(grades, params.p_click, params.p_stop, draws)
