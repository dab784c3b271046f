"""100-GHz ITU DWDM grid and the 14 energy-conserving signal/idler pairs.

Channels are handled as integer offsets from the 193.1 THz anchor, so energy
conservation is an integer identity rather than a float comparison.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import TextIO

SPEED_OF_LIGHT = 299_792_458.0  # m/s
ANCHOR_THZ = 193.1
ANCHOR_CHANNEL = 31  # C31 sits on the anchor
N_PAIRS = 14


@dataclass(frozen=True)
class ChannelGrid:
    pump_channel: int = 34
    spacing_ghz: int = 100
    first_channel: int = 19
    last_channel: int = 49
    passband_nm: float = 0.8

    def offset(self, channel: int) -> int:
        """Grid slots from the ITU anchor."""
        self._check(channel)
        return channel - ANCHOR_CHANNEL

    def frequency_ghz(self, channel: int) -> int:
        return int(round(ANCHOR_THZ * 1000)) + self.offset(channel) * self.spacing_ghz

    def frequency_hz(self, channel: int) -> float:
        return self.frequency_ghz(channel) * 1e9

    def wavelength_nm(self, channel: int) -> float:
        return SPEED_OF_LIGHT / self.frequency_hz(channel) * 1e9

    def _check(self, channel: int):
        if not isinstance(channel, int) or not self.first_channel <= channel <= self.last_channel:
            raise ValueError(f"channel C{channel} outside C{self.first_channel}-C{self.last_channel}")


DEFAULT_GRID = ChannelGrid()


@dataclass(frozen=True)
class ChannelPair:
    index: int
    signal_channel: int
    idler_channel: int
    signal_wavelength_nm: float
    idler_wavelength_nm: float

    @property
    def label(self) -> str:
        return f"s{self.index}-i{self.index}"


def _check_index(k: int):
    if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= N_PAIRS:
        raise ValueError(f"channel pair index must be an integer in 1..{N_PAIRS}, got {k!r}")


def channel_pair(k: int, grid: ChannelGrid = DEFAULT_GRID) -> ChannelPair:
    _check_index(k)
    # C33 and C35 are guard channels; pair k sits k+1 slots either side of the pump
    signal = grid.pump_channel - (k + 1)
    idler = grid.pump_channel + (k + 1)
    return ChannelPair(k, signal, idler, grid.wavelength_nm(signal), grid.wavelength_nm(idler))


def detuning_ghz(k: int, grid: ChannelGrid = DEFAULT_GRID) -> int:
    """Frequency offset of pair k from the pump (positive, in GHz)."""
    _check_index(k)
    return (k + 1) * grid.spacing_ghz


def energy_mismatch_slots(k: int, grid: ChannelGrid = DEFAULT_GRID) -> int:
    """nu_s + nu_i - 2 nu_p in grid units; zero for every valid pair."""
    p = channel_pair(k, grid)
    return grid.offset(p.signal_channel) + grid.offset(p.idler_channel) - 2 * grid.offset(grid.pump_channel)


def all_pairs(grid: ChannelGrid = DEFAULT_GRID) -> list[ChannelPair]:
    return [channel_pair(k, grid) for k in range(N_PAIRS, 0, -1)]


TABLE_HEADER = ("pair_number", "dwdm_channels", "signal_nm", "idler_nm")


def pair_table_rows(grid: ChannelGrid = DEFAULT_GRID) -> list[tuple]:
    """Rows in the order and column layout of the reference grid table."""
    rows = [
        (f"Signal {p.index} - Idler {p.index}", f"C{p.signal_channel} - C{p.idler_channel}",
         f"{p.signal_wavelength_nm:.2f}", f"{p.idler_wavelength_nm:.2f}")
        for p in all_pairs(grid)
    ]
    rows.append(("Pump", f"C{grid.pump_channel}", f"{grid.wavelength_nm(grid.pump_channel):.2f}", ""))
    return rows


def write_pair_table(out: TextIO | None = None, grid: ChannelGrid = DEFAULT_GRID) -> str:
    buf = out if out is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    w.writerows(pair_table_rows(grid))
    return buf.getvalue() if out is None else ""
