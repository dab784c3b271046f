"""Monte Carlo event generation and coincidence counting."""
from .coincidence import CoincidenceHistogram, count_coincidences, count_in_window, delay_histogram
from .counts import (CountsRecord, CountsRow, ExpectedRates, counts_from_timetags, expected_rates,
                     sample_counts, simulate_counts)
from .scenario import SCHEMES, Scenario, ScenarioError, Setting
from .simulate import (IDLER, SIGNAL, SimulationResult, apply_dead_time, default_accidental_offset, simulate,
                       window_ps)
from .timetags import TimeTagStream, read_binary, read_csv, write_binary, write_csv

__all__ = [
    "CoincidenceHistogram", "count_coincidences", "count_in_window", "delay_histogram",
    "CountsRecord", "CountsRow", "ExpectedRates", "counts_from_timetags", "expected_rates",
    "sample_counts", "simulate_counts", "SCHEMES", "Scenario", "ScenarioError", "Setting",
    "IDLER", "SIGNAL", "SimulationResult", "apply_dead_time", "default_accidental_offset", "simulate",
    "window_ps", "TimeTagStream", "read_binary", "read_csv", "write_binary", "write_csv",
]
