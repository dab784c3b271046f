"""Command line: simulate, analyze, reproduce, selftest.

Exit codes: 0 ok, 2 usage, 3 bad config, 4 missing input, 5 an analysis did
not converge, 6 selftest failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, config, experiments
from .analysis import car as car_mod
from .analysis import fringes, report, tomography
from .analysis.chsh import chsh as chsh_estimator
from .analysis.report import Metric
from .engine import (CountsRow, counts_from_timetags, read_binary, read_csv, sample_counts, simulate,
                     write_binary, write_csv)

log = logging.getLogger("sfwmsim")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_INPUT, EXIT_UNCONVERGED, EXIT_SELFTEST = 0, 2, 3, 4, 5, 6
COUNTS_HEADER = ["label", "coincidences", "accidentals", "singles_s", "singles_i", "duration_s"]


class InputError(FileNotFoundError):
    pass


@dataclass
class RunManifest:
    command: str
    preset: str
    scenario_files: list[str]
    seed: int
    duration: float
    output_dir: str
    analyses: list[str]
    tool_version: str
    config_hash: str
    scenario_hashes: list[str] = field(default_factory=list)
    converged: bool = True


def config_hash(rc: config.RunConfig) -> str:
    """Scenario hash plus the coincidence window; nothing else enters the physics."""
    blob = json.dumps({"scenario": rc.scenario.config_hash(), "window": repr(rc.window)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


# --- argument handling ---------------------------------------------------------

def _parse_set(items) -> dict:
    """``table.key=value`` pairs, values parsed as TOML scalars."""
    out: dict = {}
    for item in items or ():
        if "=" not in item:
            raise config.ConfigError(f"--set expects table.key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = config.tomllib.loads(f"v = {raw}")["v"]
        except config.tomllib.TOMLDecodeError:
            value = raw
        d = out
        parts = key.strip().split(".")
        for p in parts[:-1]:
            d = d.setdefault(p, {})
        d[parts[-1]] = value
    return out


def overrides_from_args(args) -> dict:
    ov = _parse_set(getattr(args, "set", None))
    sc = ov.setdefault("scenario", {})
    if args.seed is not None:
        sc["seed"] = args.seed
    if args.duration is not None:
        sc["duration"] = args.duration
    if args.window is not None:
        sc["window"] = args.window * 1e-9
    if args.channel_pair is not None:
        sc["channel_pair"] = args.channel_pair
    if args.power is not None:
        ov.setdefault("pump", {})["power_mw"] = args.power
    return ov


def load_config(args, default_preset: str) -> config.RunConfig:
    preset = args.preset or default_preset
    for f in args.config or ():
        if not Path(f).is_file():
            raise InputError(f"config file not found: {f}")
    return config.load(preset, overrides_from_args(args), args.config or ())


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", help="preset name or path to a .toml file")
    p.add_argument("--config", action="append", metavar="FILE", help="override file merged over the preset")
    p.add_argument("--set", action="append", metavar="TABLE.KEY=VALUE", help="single override, TOML value")
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float, help="seconds per setting")
    p.add_argument("--power", type=float, help="pump power, mW")
    p.add_argument("--window", type=float, help="coincidence window, ns")
    p.add_argument("--channel-pair", type=int)
    p.add_argument("--out", default="out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sfwmsim", description="SFWM entangled-pair source simulator")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="scenario -> time tags or counts")
    _common(p)
    p.add_argument("--mode", choices=["timetags", "counts"], default="timetags")
    p.add_argument("--csv", action="store_true", help="also write time tags as CSV")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("analyze", help="time-tag file or counts table -> metrics")
    p.add_argument("input")
    p.add_argument("--kind", choices=["car", "fringe", "chsh", "tomo"], default="car")
    p.add_argument("--window", type=float, default=0.8, help="coincidence window, ns (time-tag input)")
    p.add_argument("--duration", type=float, default=0.0, help="acquisition length, s (time-tag input)")
    p.add_argument("--seed", type=int, default=0, help="bootstrap seed (tomo)")
    p.add_argument("--out", default="out")

    p = sub.add_parser("reproduce", help="end-to-end figure or table reproduction")
    p.add_argument("target", choices=sorted(experiments.TARGETS))
    _common(p)
    p.add_argument("--mode", choices=["timetags", "counts"], help="override the target's default engine mode")

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    p.add_argument("--out", default=None)
    return ap


# --- outputs -------------------------------------------------------------------

def _prepare(out: str) -> Path:
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_common(d: Path, rc: config.RunConfig | None, manifest: RunManifest, metrics, title: str) -> None:
    if rc is not None:
        (d / "config.toml").write_text(config.dump_toml(rc.resolved))
    report.write_json(d / "manifest.json", asdict(manifest))
    report.write_json(d / "summary.json", {"target": title, "converged": manifest.converged,
                                           "config_hash": manifest.config_hash,
                                           "metrics": [asdict(m) for m in metrics]})
    (d / "summary.txt").write_text(report.format_summary(title, metrics))


def _tag_metrics(metrics, h):
    return [m if m.inputs_hash else replace(m, inputs_hash=h) for m in metrics]


# --- subcommands ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    rc = load_config(args, "cw_car_i8")
    sc, d = rc.scenario, _prepare(args.out)
    h = config_hash(rc)
    if args.mode == "timetags":
        res = simulate(sc, workers=args.workers)
        write_binary(d / "timetags.bin", res.streams.values(), sc.seed, sc.config_hash())
        if args.csv:
            write_csv(d / "timetags.csv", res.streams.values())
        row = counts_from_timetags(res, rc.window, sc.setting.label or "run")
    else:
        row = sample_counts(sc, rc.window, sc.setting.label or "run")
    _write_counts(d / "counts.csv", [row])
    est = car_mod.car_from_counts(row.coincidences, row.accidentals)
    metrics = _tag_metrics([Metric("singles_rate_s", row.singles_s / row.duration, None),
                            Metric("singles_rate_i", row.singles_i / row.duration, None),
                            Metric("coincidences", float(row.coincidences), None),
                            Metric("accidentals", float(row.accidentals), None),
                            Metric("car", est.value, est.error, note="lower bound" if est.lower_bound else "")], h)
    man = RunManifest("simulate", rc.resolved["meta"]["name"], list(args.config or ()), sc.seed, sc.duration,
                      str(args.out), [args.mode], __version__, h, [sc.config_hash()])
    _write_common(d, rc, man, metrics, f"simulate {rc.resolved['meta']['name']}")
    sys.stdout.write((d / "summary.txt").read_text())
    return EXIT_OK


def _write_counts(path, rows) -> None:
    report.write_table(path, COUNTS_HEADER, [(r.label, r.coincidences, r.accidentals, r.singles_s, r.singles_i,
                                              float(r.duration)) for r in rows])


def read_counts(path) -> list[CountsRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"label", "coincidences"} - set(reader.fieldnames or ())
        if missing:
            raise config.ConfigError(f"{path}: missing columns {sorted(missing)}")
        return [CountsRow(r["label"], int(float(r["coincidences"])), int(float(r.get("accidentals") or 0)),
                          int(float(r.get("singles_s") or 0)), int(float(r.get("singles_i") or 0)),
                          float(r.get("duration_s") or 0)) for r in reader]


def _analyze_rows(rows, kind: str, seed: int) -> tuple[list[Metric], bool, dict]:
    series: dict = {}
    if kind == "car":
        metrics, out = [], []
        for r in rows:
            e = car_mod.car_from_counts(r.coincidences, r.accidentals)
            metrics.append(Metric(f"car[{r.label}]", e.value, e.error, note="lower bound" if e.lower_bound else ""))
            out.append((r.label, e.value, e.error))
        series["car"] = (["label", "car", "car_err"], out)
        return metrics, True, series
    if kind == "fringe":
        phases = np.array([float(r.label) for r in rows])
        n = np.array([r.coincidences for r in rows], dtype=float)
        acc = np.array([r.accidentals for r in rows], dtype=float)
        fit = fringes.fit_fringe(phases, n, acc.mean(), np.sqrt(max(acc.sum(), 1.0)) / acc.size)
        metrics = [Metric("visibility_raw", fit.visibility_raw, fit.visibility_raw_err),
                   Metric("visibility_net", fit.visibility_net, fit.visibility_net_err),
                   Metric("phase", fit.phase, fit.phase_err),
                   Metric("bell_violation", float(fit.bell_violation), None)]
        return metrics, bool(fit.converged), series
    if kind == "chsh":
        res = chsh_estimator({r.label: r.coincidences for r in rows})
        return [Metric("S", res.S, res.S_err), Metric("violation_sigma", res.violation_sigma, None)], True, series
    counts = {r.label: r.coincidences for r in rows}
    fe = tomography.fidelity_with_error(counts, experiments.qstate.bell_state("phi_plus"), seed=seed)
    fit = tomography.mle_tomography(counts)
    series["density_matrix"] = (["row", "col", "re", "im"],
                                [(i, j, float(fit.rho.matrix[i, j].real), float(fit.rho.matrix[i, j].imag))
                                 for i in range(4) for j in range(4)])
    return [Metric("fidelity_phi_plus", fe.value, fe.error), Metric("purity", fit.rho.purity, None),
            Metric("mle_gradient_norm", fit.grad_norm, None)], fit.converged, series


def cmd_analyze(args) -> int:
    path = Path(args.input)
    if not path.is_file():
        raise InputError(f"input not found: {path}")
    raw = path.read_bytes()[:6]
    meta: dict = {}
    if raw == b"SFWMTT" or path.suffix in (".bin",) or (path.suffix == ".csv" and _is_timetag_csv(path)):
        if raw == b"SFWMTT":
            streams, meta = read_binary(path, args.duration)
        else:
            streams = read_csv(path, args.duration)
        if set(streams) < {0, 1}:
            raise config.ConfigError(f"{path}: need signal (0) and idler (1) streams")
        from .engine import count_coincidences, window_ps
        hist = count_coincidences(streams[0].timestamps, streams[1].timestamps, window_ps(args.window * 1e-9), 0,
                                  50_000)
        rows = [CountsRow("timetags", hist.window_total, hist.accidental_total, len(streams[0]),
                          len(streams[1]), args.duration)]
        kind = "car"
    else:
        rows = read_counts(path)
        kind = args.kind
        if kind in ("car", "fringe") and not _has_column(path, "accidentals"):
            raise config.ConfigError(f"{path}: {kind} analysis needs an accidentals column")
    if not rows:
        raise config.ConfigError(f"{path}: no rows")
    h = hashlib.sha256(path.read_bytes()).hexdigest()
    metrics, ok, series = _analyze_rows(rows, kind, args.seed)
    metrics = _tag_metrics(metrics, h)
    d = _prepare(args.out)
    for name, (header, data) in series.items():
        report.write_table(d / f"{name}.csv", header, data)
    man = RunManifest("analyze", "", [str(path)], args.seed, float(args.duration), str(args.out), [kind],
                      __version__, h, [meta.get("scenario_hash", "")] if meta else [], ok)
    _write_common(d, None, man, metrics, f"analyze {kind}")
    sys.stdout.write((d / "summary.txt").read_text())
    return EXIT_OK if ok else EXIT_UNCONVERGED


def _has_column(path: Path, name: str) -> bool:
    with open(path, newline="") as fh:
        return name in next(csv.reader(fh), [])


def _is_timetag_csv(path: Path) -> bool:
    with open(path) as fh:
        return fh.readline().strip().startswith("detector,")


def cmd_reproduce(args) -> int:
    fn, preset = experiments.TARGETS[args.target]
    rc = load_config(args, preset) if (preset or args.preset) else None
    seed = args.seed if args.seed is not None else (rc.scenario.seed if rc else 0)
    kw = {"seed": seed}
    if args.mode:
        kw["mode"] = args.mode
    rep = fn(rc, **kw)
    h = config_hash(rc) if rc else hashlib.sha256(args.target.encode()).hexdigest()
    d = _prepare(args.out)
    for name, (header, rows) in sorted(rep.series.items()):
        report.write_table(d / (f"{name}.csv" if name == args.target else f"{args.target}_{name}.csv"), header, rows)
    metrics = _tag_metrics(rep.metrics, h)
    man = RunManifest("reproduce", rc.resolved["meta"]["name"] if rc else "", list(args.config or ()), seed,
                      rc.scenario.duration if rc else 0.0, str(args.out), [args.target], __version__, h,
                      list(rep.scenario_hashes), rep.converged)
    _write_common(d, rc, man, metrics, args.target)
    if rep.notes:
        (d / "notes.txt").write_text("\n".join(rep.notes) + "\n")
    sys.stdout.write((d / "summary.txt").read_text())
    if not rep.converged:
        log.error("%s: not every analysis converged", args.target)
        return EXIT_UNCONVERGED
    return EXIT_OK


def cmd_selftest(args) -> int:
    from . import selftest
    results = selftest.run_all()
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}")
    if args.out:
        d = _prepare(args.out)
        report.write_json(d / "selftest.json", [{"check": n, "passed": ok, "detail": det} for n, ok, det in results])
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_SELFTEST


COMMANDS = {"simulate": cmd_simulate, "analyze": cmd_analyze, "reproduce": cmd_reproduce, "selftest": cmd_selftest}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except (config.ConfigError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
