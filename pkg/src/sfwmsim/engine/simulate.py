"""Seeded time-tag generation.

The acquisition is cut into fixed blocks of elementary slots (100 ps bins for
a CW pump, one slot per pulse for a pulsed pump). Every block draws from its
own Philox stream keyed by (seed, block, purpose), so blocks can be generated
in any order or in parallel and still merge into identical output.

Within a block the number of pairs is Poisson with mean mu_slot * n_slots and
the pairs are spread uniformly over the slots, which is the same law as an
independent Poisson count per slot. Arm losses are applied by Poisson
thinning into both-survive / signal-only / idler-only classes, the analyzers
by sampling the branch tables, and gating, dedup and dead time come last.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .scenario import Scenario
from .timetags import TimeTagStream

SIGNAL, IDLER = 0, 1
_PAIRS, _NOISE_S, _NOISE_I, _DARK_S, _DARK_I, _JITTER_S, _JITTER_I = range(7)


@njit(cache=True)
def _dead_time_mask(t, dead_ps):
    keep = np.zeros(t.shape[0], dtype=np.bool_)
    last = 0
    have = False
    for k in range(t.shape[0]):
        if not have or t[k] - last >= dead_ps:
            keep[k] = True
            last = t[k]
            have = True
    return keep


def apply_dead_time(t: np.ndarray, dead_ps: int) -> np.ndarray:
    """Non-paralyzable dead time on a sorted stream."""
    if dead_ps <= 0 or t.size == 0:
        return t
    return t[_dead_time_mask(t, np.int64(dead_ps))]


def block_rng(seed: int, block: int, purpose: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block, purpose])))


@dataclass(frozen=True)
class _Table:
    reach: np.ndarray
    slot: np.ndarray
    prob: np.ndarray

    @classmethod
    def single(cls, table):
        keys = sorted(table)
        p = np.array([table[k] for k in keys], dtype=float)
        return cls(np.array([k[0] for k in keys]), np.array([k[1] for k in keys], dtype=np.int64), p / p.sum())

    def sample(self, rng, n):
        idx = rng.choice(self.prob.size, size=n, p=self.prob)
        return self.reach[idx], self.slot[idx]


@dataclass(frozen=True)
class _PairTable:
    reach_s: np.ndarray
    reach_i: np.ndarray
    slot_s: np.ndarray
    slot_i: np.ndarray
    prob: np.ndarray

    @classmethod
    def from_branches(cls, table):
        keys = sorted(table)
        p = np.array([table[k] for k in keys], dtype=float)
        cols = list(zip(*keys))
        return cls(np.array(cols[0]), np.array(cols[1]), np.array(cols[2], dtype=np.int64),
                   np.array(cols[3], dtype=np.int64), p / p.sum())

    def sample(self, rng, n):
        idx = rng.choice(self.prob.size, size=n, p=self.prob)
        return self.reach_s[idx], self.reach_i[idx], self.slot_s[idx], self.slot_i[idx]


@dataclass(frozen=True)
class _Plan:
    pulsed: bool
    unit_ps: int  # slot length (CW) or pulse period
    n_units: int
    block_units: int
    delay_ps: int
    mu_unit: float
    t_s: float
    t_i: float
    pairs: _PairTable
    sig: _Table
    idl: _Table
    noise_s: _Table
    noise_i: _Table
    noise_rate_s: float
    noise_rate_i: float
    dark_s: float
    dark_i: float
    gated_s: tuple | None  # (offset_ps, width_ps)
    gated_i: tuple | None
    jitter_s_ps: float
    jitter_i_ps: float
    seed: int

    @property
    def n_blocks(self) -> int:
        return -(-self.n_units // self.block_units)


def make_plan(sc: Scenario) -> _Plan:
    pulsed = sc.pump.pulsed
    if pulsed:
        unit_ps = int(round(1e12 / sc.pump.rep_rate))
    else:
        unit_ps = int(round(sc.slot * 1e12))
    unit_s = unit_ps * 1e-12
    n_units = int(round(sc.duration / unit_s))
    block_units = max(1, int(round(sc.block_duration / unit_s)))
    br = sc.branches()

    def gate(det):
        if not det.gated:
            return None
        return (int(round(det.gate_offset * 1e12)), int(round(det.gate_width * 1e12)))

    return _Plan(
        pulsed=pulsed, unit_ps=unit_ps, n_units=n_units, block_units=block_units,
        delay_ps=int(round(br.slot * 1e12)), mu_unit=sc.pair_rate() * unit_s,
        t_s=sc.transmission_s, t_i=sc.transmission_i,
        pairs=_PairTable.from_branches(br.pair), sig=_Table.single(br.signal), idl=_Table.single(br.idler),
        noise_s=_Table.single(br.noise_signal), noise_i=_Table.single(br.noise_idler),
        noise_rate_s=sc.noise_rate("s"), noise_rate_i=sc.noise_rate("i"),
        dark_s=sc.detector_s.dark_rate, dark_i=sc.detector_i.dark_rate,
        gated_s=gate(sc.detector_s), gated_i=gate(sc.detector_i),
        jitter_s_ps=sc.detector_s.jitter * 1e12, jitter_i_ps=sc.detector_i.jitter * 1e12,
        seed=sc.seed,
    )


def _emission_times(plan: _Plan, rng, u0: int, nu: int, n: int) -> np.ndarray:
    units = rng.integers(u0, u0 + nu, size=n, dtype=np.int64)
    t = units * plan.unit_ps
    if not plan.pulsed:
        t += rng.integers(0, plan.unit_ps, size=n, dtype=np.int64)
    return t


def _dark_times(plan: _Plan, rng, u0: int, nu: int, rate: float, gate) -> np.ndarray:
    n = rng.poisson(rate * nu * plan.unit_ps * 1e-12)
    if gate is None:
        return rng.integers(u0 * plan.unit_ps, (u0 + nu) * plan.unit_ps, size=n, dtype=np.int64)
    offset, width = gate
    g = rng.integers(u0, u0 + nu, size=n, dtype=np.int64)
    return g * plan.unit_ps + offset - width // 2 + rng.integers(0, width, size=n, dtype=np.int64)


def simulate_block(plan: _Plan, b: int) -> tuple[np.ndarray, np.ndarray]:
    """Unsorted raw detection times (ps) for one block, signal and idler."""
    u0 = b * plan.block_units
    nu = min(plan.block_units, plan.n_units - u0)
    block_s = nu * plan.unit_ps * 1e-12
    out_s, out_i = [], []

    rng = block_rng(plan.seed, b, _PAIRS)
    mean = plan.mu_unit * nu
    ts, ti = plan.t_s, plan.t_i
    n_both, n_s, n_i = rng.poisson([mean * ts * ti, mean * ts * (1 - ti), mean * (1 - ts) * ti])
    t0 = _emission_times(plan, rng, u0, nu, n_both)
    rs, ri, ss, si = plan.pairs.sample(rng, n_both)
    out_s.append(t0[rs] + ss[rs] * plan.delay_ps)
    out_i.append(t0[ri] + si[ri] * plan.delay_ps)
    t0 = _emission_times(plan, rng, u0, nu, n_s)
    r, sl = plan.sig.sample(rng, n_s)
    out_s.append(t0[r] + sl[r] * plan.delay_ps)
    t0 = _emission_times(plan, rng, u0, nu, n_i)
    r, sl = plan.idl.sample(rng, n_i)
    out_i.append(t0[r] + sl[r] * plan.delay_ps)

    for purpose, rate, table, out in ((_NOISE_S, plan.noise_rate_s, plan.noise_s, out_s),
                                      (_NOISE_I, plan.noise_rate_i, plan.noise_i, out_i)):
        rng = block_rng(plan.seed, b, purpose)
        n = rng.poisson(rate * block_s)
        t0 = _emission_times(plan, rng, u0, nu, n)
        r, sl = table.sample(rng, n)
        out.append(t0[r] + sl[r] * plan.delay_ps)

    out_s.append(_dark_times(plan, block_rng(plan.seed, b, _DARK_S), u0, nu, plan.dark_s, plan.gated_s))
    out_i.append(_dark_times(plan, block_rng(plan.seed, b, _DARK_I), u0, nu, plan.dark_i, plan.gated_i))

    t_s = np.concatenate(out_s)
    t_i = np.concatenate(out_i)
    if plan.jitter_s_ps > 0:
        t_s = t_s + np.rint(block_rng(plan.seed, b, _JITTER_S).normal(0, plan.jitter_s_ps, t_s.size)).astype(np.int64)
    if plan.jitter_i_ps > 0:
        t_i = t_i + np.rint(block_rng(plan.seed, b, _JITTER_I).normal(0, plan.jitter_i_ps, t_i.size)).astype(np.int64)
    return t_s, t_i


def _blocks(args):
    plan, lo, hi = args
    parts = [simulate_block(plan, b) for b in range(lo, hi)]
    return [p[0] for p in parts], [p[1] for p in parts]


def _in_gate(t: np.ndarray, period: int, gate) -> np.ndarray:
    offset, width = gate
    rel = np.mod(t - offset, period)
    return (rel < width - width // 2) | (rel >= period - width // 2)


def _finish(t: np.ndarray, plan: _Plan, gate, dead_ps: int) -> np.ndarray:
    t = np.unique(t)  # sorts; coincident photons give one click
    if gate is not None:
        t = t[_in_gate(t, plan.unit_ps, gate)]
    t = t[t >= 0]
    return apply_dead_time(t, dead_ps)


@dataclass(frozen=True, eq=False)
class SimulationResult:
    scenario: Scenario
    streams: dict  # detector id -> TimeTagStream

    @property
    def signal(self) -> TimeTagStream:
        return self.streams[SIGNAL]

    @property
    def idler(self) -> TimeTagStream:
        return self.streams[IDLER]


def simulate(sc: Scenario, workers: int = 1) -> SimulationResult:
    """Time-tag streams for both detectors; identical for identical scenarios."""
    plan = make_plan(sc)
    nb = plan.n_blocks
    if workers > 1 and nb > 1:
        step = -(-nb // workers)
        chunks = [(plan, lo, min(nb, lo + step)) for lo in range(0, nb, step)]
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_blocks, chunks))
    else:
        results = [_blocks((plan, 0, nb))]
    raw_s = [x for r in results for x in r[0]]
    raw_i = [x for r in results for x in r[1]]
    empty = np.empty(0, np.int64)
    t_s = _finish(np.concatenate(raw_s) if raw_s else empty, plan, plan.gated_s,
                  int(round(sc.detector_s.dead_time * 1e12)))
    t_i = _finish(np.concatenate(raw_i) if raw_i else empty, plan, plan.gated_i,
                  int(round(sc.detector_i.dead_time * 1e12)))
    return SimulationResult(sc, {SIGNAL: TimeTagStream(SIGNAL, t_s, sc.duration),
                                 IDLER: TimeTagStream(IDLER, t_i, sc.duration)})


def default_accidental_offset(sc: Scenario) -> int:
    """Offset (ps) of the accidental window: well clear of every true peak."""
    if sc.pump.pulsed:
        return 5 * int(round(1e12 / sc.pump.rep_rate))
    delay = max((u.delay for u in sc.umis), default=0.0)
    return int(max(50e-9, 20 * delay) * 1e12)


def window_ps(tau: float) -> int:
    """Coincidence window in ps, rounded to an even number of 100-ps bins."""
    w = int(round(tau * 1e12 / 200.0)) * 200
    if w <= 0 or not math.isclose(w, tau * 1e12, rel_tol=0, abs_tol=1.0):
        raise ValueError(f"window {tau} s is not a multiple of 200 ps")
    return w
