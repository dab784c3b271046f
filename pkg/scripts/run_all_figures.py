#!/usr/bin/env python3
"""Run every reproduction target through the CLI and tabulate the outcome.

    python3 scripts/run_all_figures.py --out results --seed 0
    python3 scripts/run_all_figures.py fig2b fig3d

Each target writes into <out>/<target>/. Exit status is non-zero if any
target fails.
"""
import argparse
import contextlib
import io
import json
import sys
import time
from pathlib import Path

from sfwmsim import cli, experiments


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("targets", nargs="*", help="default: all")
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mode", choices=["timetags", "counts"])
    ap.add_argument("-v", "--verbose", action="store_true", help="echo each summary")
    args = ap.parse_args(argv)

    targets = args.targets or sorted(experiments.TARGETS)
    unknown = set(targets) - set(experiments.TARGETS)
    if unknown:
        ap.error(f"unknown targets: {', '.join(sorted(unknown))}")
    failures = 0
    print(f"{'target':<10} {'exit':>4} {'seconds':>8}  headline")
    for t in targets:
        out = Path(args.out) / t
        argv_t = ["reproduce", t, "--seed", str(args.seed), "--out", str(out)]
        if args.mode:
            argv_t += ["--mode", args.mode]
        buf = io.StringIO()
        t0 = time.perf_counter()
        with contextlib.redirect_stdout(buf):
            code = cli.main(argv_t)
        dt = time.perf_counter() - t0
        failures += code != 0
        head = ""
        summary = out / "summary.json"
        if summary.is_file():
            m = json.loads(summary.read_text())["metrics"]
            if m:
                head = f"{m[0]['metric']} = {m[0]['value']:.6g}"
        print(f"{t:<10} {code:>4} {dt:>8.1f}  {head}")
        if args.verbose:
            print(buf.getvalue())
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
