#!/usr/bin/env python3
"""Re-derive the CW source constants behind the i8 presets.

Solves for the pair coefficient xi and the idler Raman coefficient so that,
with the detector and loss settings of the preset, the engine's rate model
gives the target true-coincidence rate and CAR. The signal Raman
coefficient is tied to the idler one by a fixed ratio. Prints the solution
next to the preset values and a [source] snippet ready to paste.

    python3 scripts/calibrate_presets.py --true-rate 51 --car 80
"""
import argparse
import math
from dataclasses import replace

from scipy.optimize import brentq, fsolve

from sfwmsim import config
from sfwmsim.engine import expected_rates


def solve(sc, tau, true_rate, car, ratio):
    sc = sc.with_setting(analyzers=False)

    def rates(xi, raman_i):
        src = replace(sc.source, xi=xi, raman_i=raman_i, raman_s=ratio * raman_i,
                      pulsed_xi=sc.source.pulsed_xi)
        e = expected_rates(replace(sc, source=src), tau)
        return e.true, e.window / e.accidental

    def resid(q):
        t, c = rates(math.exp(q[0]), math.exp(q[1]))
        return [math.log(t / true_rate), math.log((c - 1) / (car - 1))]

    # start from the dead-time-free pair rate; Raman from a 1-D solve on CAR
    T2 = sc.transmission_s * sc.transmission_i
    xi0 = true_rate / (T2 * sc.pump.power_mw**2)
    r0 = brentq(lambda r: rates(xi0, r)[1] - car, 1.0, 1e9)
    q, info, ok, msg = fsolve(resid, [math.log(xi0), math.log(r0)], full_output=True, xtol=1e-13)
    if ok != 1:
        raise RuntimeError(f"calibration did not converge: {msg}")
    xi, raman_i = math.exp(q[0]), math.exp(q[1])
    return xi, raman_i, rates(xi, raman_i)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--preset", default="cw_car_i8")
    ap.add_argument("--true-rate", type=float, default=51.0, help="true coincidences per second")
    ap.add_argument("--car", type=float, default=80.0)
    ap.add_argument("--ratio", type=float, default=1.5, help="signal / idler Raman coefficient")
    args = ap.parse_args(argv)

    rc = config.load(args.preset)
    sc = rc.scenario
    xi, raman_i, (t, c) = solve(sc, rc.window, args.true_rate, args.car, args.ratio)
    duty = sc.pump.pulse_width * sc.pump.rep_rate
    print(f"preset {args.preset}: P = {sc.pump.power_mw} mW, tau = {rc.window * 1e9:g} ns, "
          f"T_s = {sc.transmission_s:.6g}, T_i = {sc.transmission_i:.6g}")
    print(f"model check: true = {t:.6g} /s, CAR = {c:.6g}")
    print(f"{'':12} {'solved':>14} {'preset':>14}")
    for name, new, old in (("xi", xi, sc.source.xi), ("raman_i", raman_i, sc.source.raman_i),
                           ("raman_s", args.ratio * raman_i, sc.source.raman_s),
                           ("pulsed_xi", xi / duty, sc.source.pulsed_xi)):
        print(f"{name:12} {new:14.8g} {old:14.8g}")
    print("\n[source]")
    print(f"xi = {xi:.2f}\nraman_s = {args.ratio * raman_i:.1f}\nraman_i = {raman_i:.1f}\npulsed_xi = {xi / duty:.1f}")


if __name__ == "__main__":
    main()
