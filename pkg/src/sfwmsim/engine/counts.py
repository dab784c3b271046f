"""Counts-mode runs: per-setting coincidence tables without time tags.

Expected rates come from the same branch tables the time-tag generator
samples; counts are then drawn as Poisson variates. Detector jitter is not
modelled here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..photonics import DetectorParams
from .coincidence import count_coincidences
from .scenario import Scenario, Setting
from .simulate import SimulationResult, default_accidental_offset, window_ps


@dataclass(frozen=True)
class ExpectedRates:
    """Per-second expectations after dead time."""

    window: float  # zero-delay window, true + accidental
    true: float
    accidental: float  # offset window
    singles_s: float
    singles_i: float
    raw_singles_s: float
    raw_singles_i: float


def _in_window(delay: float, tau: float) -> bool:
    return -tau / 2 <= delay < tau / 2


def _live(rate: float, det: DetectorParams) -> float:
    return 1.0 / (1.0 + rate * det.dead_time)


def _reach(table, slot=None) -> float:
    return sum(p for (r, s), p in table.items() if r and (slot is None or s == slot))


def _expected_cw(sc: Scenario, tau: float) -> ExpectedRates:
    br = sc.branches()
    lam = sc.pair_rate()
    ts, ti = sc.transmission_s, sc.transmission_i
    r_s = lam * ts * _reach(br.signal) + sc.noise_rate("s") * _reach(br.noise_signal) + sc.detector_s.dark_rate
    r_i = lam * ti * _reach(br.idler) + sc.noise_rate("i") * _reach(br.noise_idler) + sc.detector_i.dark_rate
    true = lam * ts * ti * sum(p for (rs, ri, js, ji), p in br.pair.items()
                               if rs and ri and _in_window((ji - js) * br.slot, tau))
    acc = r_s * r_i * tau
    f = _live(r_s, sc.detector_s) * _live(r_i, sc.detector_i)
    return ExpectedRates((true + acc) * f, true * f, acc * f, r_s * _live(r_s, sc.detector_s),
                         r_i * _live(r_i, sc.detector_i), r_s, r_i)


def _gate_contains(det: DetectorParams, t: float) -> bool:
    if not det.gated:
        return True
    return -det.gate_width / 2 <= t - det.gate_offset < det.gate_width / 2


def _dark_in_window(det: DetectorParams, centre: float, tau: float, rep: float) -> float:
    """Probability of a dark click of ``det`` within tau around ``centre`` in one period."""
    if not det.gated:
        return det.dark_rate * tau
    lo = max(centre - tau / 2, det.gate_offset - det.gate_width / 2)
    hi = min(centre + tau / 2, det.gate_offset + det.gate_width / 2)
    return det.dark_rate / rep * max(0.0, hi - lo) / det.gate_width


def _expected_pulsed(sc: Scenario, tau: float) -> ExpectedRates:
    br = sc.branches()
    rep = sc.pump.rep_rate
    mu = sc.pair_rate() / rep
    ts, ti = sc.transmission_s, sc.transmission_i
    ns, ni = sc.noise_rate("s") / rep, sc.noise_rate("i") / rep
    ds, di = sc.detector_s, sc.detector_i
    slots = sorted({k[2] for k in br.pair} | {k[3] for k in br.pair}
                   | {k[1] for k in br.noise_signal} | {k[1] for k in br.noise_idler})

    lam_s = {j: (mu * ts * _reach(br.signal, j) + ns * _reach(br.noise_signal, j))
             if _gate_contains(ds, j * br.slot) else 0.0 for j in slots}
    lam_i = {k: (mu * ti * _reach(br.idler, k) + ni * _reach(br.noise_idler, k))
             if _gate_contains(di, k * br.slot) else 0.0 for k in slots}
    click_s = {j: -math.expm1(-lam_s[j]) for j in slots}
    click_i = {k: -math.expm1(-lam_i[k]) for k in slots}

    same = other = 0.0
    for j in slots:
        for k in slots:
            if not _in_window((k - j) * br.slot, tau):
                continue
            joint = 0.0
            if _gate_contains(ds, j * br.slot) and _gate_contains(di, k * br.slot):
                joint = mu * ts * ti * br.pair.get((True, True, j, k), 0.0)
            both = 1 - math.exp(-lam_s[j]) - math.exp(-lam_i[k]) + math.exp(-(lam_s[j] + lam_i[k] - joint))
            same += both
            other += click_s[j] * click_i[k]
    # darks are uncorrelated with everything: identical in both windows
    darks = sum(click_i[k] * _dark_in_window(ds, k * br.slot, tau, rep) for k in slots)
    darks += sum(click_s[j] * _dark_in_window(di, j * br.slot, tau, rep) for j in slots)
    if ds.gated and di.gated:
        darks += ds.dark_rate / rep * di.dark_rate / rep * tau / max(ds.gate_width, di.gate_width)
    elif ds.gated or di.gated:
        darks += ds.dark_rate / rep * di.dark_rate * tau if ds.gated else di.dark_rate / rep * ds.dark_rate * tau
    else:
        darks += ds.dark_rate * di.dark_rate * tau / rep
    same += darks
    other += darks

    r_s = rep * sum(click_s.values()) + ds.dark_rate
    r_i = rep * sum(click_i.values()) + di.dark_rate
    f = _live(r_s, ds) * _live(r_i, di)
    return ExpectedRates(same * rep * f, (same - other) * rep * f, other * rep * f,
                         r_s * _live(r_s, ds), r_i * _live(r_i, di), r_s, r_i)


def expected_rates(sc: Scenario, tau: float) -> ExpectedRates:
    if tau <= 0:
        raise ValueError("coincidence window must be positive")
    return _expected_pulsed(sc, tau) if sc.pump.pulsed else _expected_cw(sc, tau)


@dataclass(frozen=True)
class CountsRow:
    label: str
    coincidences: int
    accidentals: int
    singles_s: int = 0
    singles_i: int = 0
    duration: float = 0.0

    def __post_init__(self):
        if min(self.coincidences, self.accidentals, self.singles_s, self.singles_i) < 0:
            raise ValueError("counts must be non-negative")


@dataclass(frozen=True)
class CountsRecord:
    rows: tuple[CountsRow, ...]
    window: float
    scenario_hash: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def by_label(self) -> dict[str, CountsRow]:
        return {r.label: r for r in self.rows}

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def _counts_rng(sc: Scenario) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([sc.seed, int(sc.config_hash()[:15], 16)])))


def sample_counts(sc: Scenario, tau: float, label: str | None = None) -> CountsRow:
    """One setting, Poisson-sampled at the scenario duration."""
    e = expected_rates(sc, tau)
    rng = _counts_rng(sc)
    T = sc.duration
    acc = rng.poisson(e.accidental * T)
    win = rng.poisson(e.window * T)
    s_s, s_i = rng.poisson([e.singles_s * T, e.singles_i * T])
    return CountsRow(label if label is not None else sc.setting.label, int(win), int(acc), int(s_s), int(s_i), T)


def simulate_counts(sc: Scenario, tau: float, settings: list[Setting] | None = None) -> CountsRecord:
    """Counts-mode run over a list of settings (default: the scenario's own)."""
    settings = [sc.setting] if settings is None else settings
    rows = []
    for k, st in enumerate(settings):
        run = sc.with_setting(**{f: getattr(st, f) for f in st.__dataclass_fields__})
        rows.append(sample_counts(run, tau, st.label or str(k)))
    return CountsRecord(tuple(rows), tau, sc.config_hash())


def counts_from_timetags(result: SimulationResult, tau: float, label: str = "",
                         accidental_offset_ps: int | None = None) -> CountsRow:
    sc = result.scenario
    off = default_accidental_offset(sc) if accidental_offset_ps is None else accidental_offset_ps
    h = count_coincidences(result.signal, result.idler, window_ps(tau), 0, off)
    return CountsRow(label or sc.setting.label, h.window_total, h.accidental_total,
                     len(result.signal), len(result.idler), sc.duration)
