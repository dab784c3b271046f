"""Coincidence counting between two time-tag streams.

Windows are half-open in the delay d = t_b - t_a - offset:
-tau/2 <= d < tau/2, so a window of tau ps covers exactly tau/bin_width bins.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .timetags import TimeTagStream


@njit(cache=True)
def _count_window(a, b, lo, hi):
    # two-pointer merge: count pairs with lo <= b[j] - a[i] < hi
    n = 0
    j0 = 0
    nb = b.shape[0]
    for i in range(a.shape[0]):
        t_lo = a[i] + lo
        while j0 < nb and b[j0] < t_lo:
            j0 += 1
        t_hi = a[i] + hi
        j = j0
        while j < nb and b[j] < t_hi:
            n += 1
            j += 1
    return n


@njit(cache=True)
def _delay_histogram(a, b, lo, bin_width, nbins):
    counts = np.zeros(nbins, dtype=np.int64)
    hi = lo + bin_width * nbins
    j0 = 0
    nb = b.shape[0]
    for i in range(a.shape[0]):
        t_lo = a[i] + lo
        while j0 < nb and b[j0] < t_lo:
            j0 += 1
        t_hi = a[i] + hi
        j = j0
        while j < nb and b[j] < t_hi:
            counts[(b[j] - t_lo) // bin_width] += 1
            j += 1
    return counts


def _as_sorted(x) -> np.ndarray:
    ts = x.timestamps if isinstance(x, TimeTagStream) else np.ascontiguousarray(x, dtype=np.int64)
    if ts.size > 1 and np.any(np.diff(ts) < 0):
        raise ValueError("time tags must be sorted")
    return ts


def count_in_window(a, b, window_ps: int, offset_ps: int = 0) -> int:
    ta, tb = _as_sorted(a), _as_sorted(b)
    half = window_ps // 2
    return int(_count_window(ta, tb, offset_ps - half, offset_ps - half + window_ps))


def delay_histogram(a, b, start_ps: int, bin_ps: int, nbins: int) -> np.ndarray:
    """Counts of t_b - t_a in [start + k bin, start + (k+1) bin)."""
    if bin_ps <= 0 or nbins <= 0:
        raise ValueError("bin width and bin count must be positive")
    return _delay_histogram(_as_sorted(a), _as_sorted(b), int(start_ps), int(bin_ps), int(nbins))


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    bin_width: int  # ps
    start: int  # ps, left edge of bin 0
    counts: np.ndarray
    window: int  # ps
    offset: int  # ps, centre of the signal window
    window_total: int
    accidental_offset: int | None
    accidental_total: int | None
    duration: float = 0.0

    @property
    def centers(self) -> np.ndarray:
        return self.start + self.bin_width * (np.arange(self.counts.size) + 0.5)

    def window_bins(self) -> slice:
        lo = self.offset - self.window // 2
        first = (lo - self.start) // self.bin_width
        return slice(int(first), int(first + self.window // self.bin_width))

    def area(self, center_ps: int, width_ps: int | None = None) -> int:
        """Sum of bins covering [center - width/2, center + width/2)."""
        width = self.window if width_ps is None else width_ps
        lo = center_ps - width // 2
        first = (lo - self.start) // self.bin_width
        n = width // self.bin_width
        if first < 0 or first + n > self.counts.size:
            raise ValueError("requested window lies outside the histogram")
        return int(self.counts[first:first + n].sum())


def count_coincidences(a, b, window_ps: int, offset_ps: int = 0, accidental_offset_ps: int | None = None,
                       bin_ps: int = 100, span_ps: int | None = None, duration: float | None = None
                       ) -> CoincidenceHistogram:
    """Window total, offset-window accidentals and a delay histogram.

    The histogram spans ``offset +- span/2`` (default: 4 windows) and is
    aligned so the signal window is made of whole bins.
    """
    if window_ps <= 0:
        raise ValueError("coincidence window must be positive")
    if window_ps % (2 * bin_ps):
        raise ValueError("window must be an even multiple of the bin width")
    ta, tb = _as_sorted(a), _as_sorted(b)
    half = window_ps // 2
    span = 4 * window_ps if span_ps is None else int(span_ps)
    nb_half = -(-(span // 2) // bin_ps)
    nb_half = max(nb_half, half // bin_ps)
    start = offset_ps - nb_half * bin_ps
    nbins = 2 * nb_half
    counts = _delay_histogram(ta, tb, start, bin_ps, nbins)
    total = int(_count_window(ta, tb, offset_ps - half, offset_ps + half))
    acc = None
    if accidental_offset_ps is not None:
        acc = int(_count_window(ta, tb, accidental_offset_ps - half, accidental_offset_ps + half))
    if duration is None:
        duration = getattr(a, "duration", 0.0) or 0.0
    return CoincidenceHistogram(bin_ps, int(start), counts, window_ps, offset_ps, total,
                                accidental_offset_ps, acc, duration)
