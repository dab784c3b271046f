"""Coincidence-to-accidental ratio from windowed counts."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class CarEstimate:
    value: float
    error: float
    window_total: int
    accidental_total: int
    lower_bound: bool = False  # no accidentals seen: value uses one count

    def __str__(self) -> str:
        s = f"{self.value:.4g} +- {self.error:.2g}"
        return (">= " + s) if self.lower_bound else s


def car_from_counts(window_total: float, accidental_total: float) -> CarEstimate:
    """CAR = window / accidental with Poisson errors on both."""
    if window_total < 0 or accidental_total < 0:
        raise ValueError("counts must be non-negative")
    lower = accidental_total == 0
    acc = 1.0 if lower else float(accidental_total)
    value = window_total / acc
    rel = math.sqrt((1.0 / window_total if window_total else 0.0) + 1.0 / acc)
    return CarEstimate(value, value * rel, int(window_total), int(accidental_total), lower)


def estimate_car(h) -> CarEstimate:
    """From a CoincidenceHistogram (or anything with window/accidental totals)."""
    acc = getattr(h, "accidental_total", None)
    if acc is None:
        raise ValueError("histogram carries no accidental estimate")
    return car_from_counts(h.window_total, acc)
