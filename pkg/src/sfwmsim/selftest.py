"""Built-in invariant checks, run by ``sfwmsim selftest``.

Each check is quick and self-contained; it returns (name, passed, detail).
The full pytest suite goes further; these are the checks worth having in
an installed copy with no test tree.
"""
from __future__ import annotations

import math
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import channels, config, photonics as ph, qstate
from .analysis.chsh import chsh, chsh_probabilities
from .analysis import tomography
from .engine import count_coincidences, default_accidental_offset, simulate, window_ps, write_binary


def check_grid():
    g = channels.DEFAULT_GRID
    bad = [p.index for p in channels.all_pairs()
           if g.frequency_ghz(p.signal_channel) + g.frequency_ghz(p.idler_channel) != 2 * g.frequency_ghz(g.pump_channel)]
    return not bad, f"{channels.N_PAIRS} pairs, energy mismatches: {bad or 'none'}"


def check_thermal_period():
    T = ph.umi_period(ph.UMIParams())
    return abs(T - 0.585) < 1e-3, f"period {T:.4f} K"


def check_chsh_bounds():
    S = chsh(chsh_probabilities(qstate.bell_state("phi_plus"))).S
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        a, b = (rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(2))
        psi = np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b))
        worst = max(worst, abs(chsh(chsh_probabilities(np.outer(psi, psi.conj()))).S))
    ok = abs(S - 2 * math.sqrt(2)) < 1e-9 and worst <= 2 + 1e-9
    return ok, f"Bell S={S:.12f}, separable max |S|={worst:.6f}"


def check_mle_gradient():
    rng = np.random.default_rng(5)
    P = tomography.projectors()
    n = np.array(list(tomography.sample_counts(qstate.werner_state(0.9), 1000, rng).values()), float)
    t = rng.normal(size=16)
    g = tomography.nll_gradient(t, P, n)
    h = 1e-6
    fd = np.array([(tomography.neg_log_likelihood(t + h * e, P, n) - tomography.neg_log_likelihood(t - h * e, P, n))
                   / (2 * h) for e in np.eye(16)])
    rel = float(np.linalg.norm(g - fd) / np.linalg.norm(fd))
    return rel < 1e-5, f"relative error {rel:.2e}"


def _small(duration=1.0, **kw):
    rc = config.load("energy_time_i8")
    return rc, replace(rc.scenario, duration=duration, **kw)


def check_determinism():
    _, sc = _small(0.5, seed=42)
    with tempfile.TemporaryDirectory() as d:
        blobs = []
        for k in range(2):
            r = simulate(sc)
            p = Path(d) / f"run{k}.bin"
            write_binary(p, r.streams.values(), sc.seed, sc.config_hash())
            blobs.append(p.read_bytes())
    return blobs[0] == blobs[1], f"{len(blobs[0])} bytes per run"


def check_dead_time():
    _, sc = _small(0.5, seed=3)
    sc = sc.with_power(5.0)
    r = simulate(sc)
    dead = {0: sc.detector_s.dead_time, 1: sc.detector_i.dead_time}
    gaps = {k: s.min_gap() for k, s in r.streams.items()}
    ok = all(g is None or g >= round(dead[k] * 1e12) for k, g in gaps.items())
    return ok, f"min gaps (ps) {gaps}"


def check_accidentals():
    # no pairs: both streams carry only Raman photons and darks
    _, sc = _small(100.0, seed=9)
    sc = replace(sc.with_power(2.0), source=replace(sc.source, xi=0.0)).with_setting(analyzers=False)
    r = simulate(sc)
    tau = 3.2e-9
    h = count_coincidences(r.signal, r.idler, window_ps(tau), 0, None)
    expect = len(r.signal) / sc.duration * len(r.idler) / sc.duration * tau * sc.duration
    z = (h.window_total - expect) / math.sqrt(expect)
    return abs(z) < 3, f"observed {h.window_total}, expected {expect:.1f} ({z:+.2f} sigma)"


def check_three_peaks():
    _, sc = _small(60.0, seed=4)
    sc = sc.with_power(3.0).with_setting(phase_randomized=True)
    r = simulate(sc)
    d = int(round(sc.umis[0].delay * 1e12))
    w = window_ps(0.8e-9)
    h = count_coincidences(r.signal, r.idler, w, 0, default_accidental_offset(sc), span_ps=4 * d)
    acc = h.accidental_total
    left, mid, right = (h.area(c) - acc for c in (-d, 0, d))
    side = left + right
    # central peak equals the two side peaks together; the side peaks match
    z1 = (mid - side) / math.sqrt(h.area(0) + h.area(-d) + h.area(d) + 4 * acc)
    z2 = (left - right) / math.sqrt(h.area(-d) + h.area(d))
    ok = abs(z1) < 3 and abs(z2) < 3
    return ok, f"peaks {left}:{mid}:{right} after accidentals, z={z1:+.2f}/{z2:+.2f}"


CHECKS = [("grid energy conservation", check_grid), ("thermal period", check_thermal_period),
          ("chsh analytic bounds", check_chsh_bounds), ("mle gradient", check_mle_gradient),
          ("determinism", check_determinism), ("dead time", check_dead_time),
          ("accidental rate", check_accidentals), ("three-peak ratio", check_three_peaks)]


def run_all():
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
