import json
import subprocess
import sys

import pytest

from sfwmsim import cli


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_usage_error_exit_code(capsys):
    assert run("frobnicate") == cli.EXIT_USAGE
    assert run() == cli.EXIT_USAGE


def test_unknown_preset_is_config_error(tmp_path):
    assert run("simulate", "--preset", "nope", "--out", tmp_path) == cli.EXIT_CONFIG


def test_bad_set_is_config_error(tmp_path):
    assert run("simulate", "--set", "detector_s.efficiency=7", "--out", tmp_path) == cli.EXIT_CONFIG
    assert run("simulate", "--set", "novalue", "--out", tmp_path) == cli.EXIT_CONFIG


def test_missing_input_exit_code(tmp_path):
    assert run("analyze", tmp_path / "absent.bin", "--out", tmp_path) == cli.EXIT_INPUT


def test_simulate_timetags_writes_outputs(tmp_path):
    out = tmp_path / "sim"
    rc = run("simulate", "--preset", "cw_car_i8", "--duration", 0.5, "--seed", 3, "--csv", "--out", out)
    assert rc == cli.EXIT_OK
    for name in ("timetags.bin", "timetags.csv", "counts.csv", "config.toml", "manifest.json", "summary.json",
                 "summary.txt"):
        assert (out / name).is_file(), name
    man = json.loads((out / "manifest.json").read_text())
    assert man["seed"] == 3 and man["duration"] == 0.5 and man["command"] == "simulate"
    assert len(man["config_hash"]) == 64


def test_simulate_is_byte_reproducible(tmp_path):
    blobs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert run("simulate", "--duration", 0.3, "--seed", 11, "--out", out) == 0
        blobs.append({n: (out / n).read_bytes() for n in ("timetags.bin", "counts.csv", "summary.json")})
    assert blobs[0] == blobs[1]


def test_seed_changes_output(tmp_path):
    run("simulate", "--duration", 0.3, "--seed", 1, "--out", tmp_path / "a")
    run("simulate", "--duration", 0.3, "--seed", 2, "--out", tmp_path / "b")
    assert (tmp_path / "a" / "timetags.bin").read_bytes() != (tmp_path / "b" / "timetags.bin").read_bytes()


def test_analyze_timetags_round_trip(tmp_path):
    run("simulate", "--duration", 2, "--seed", 5, "--out", tmp_path / "sim")
    assert run("analyze", tmp_path / "sim" / "timetags.bin", "--duration", 2, "--out", tmp_path / "an") == 0
    sim = json.loads((tmp_path / "sim" / "summary.json").read_text())
    an = json.loads((tmp_path / "an" / "summary.json").read_text())
    car_sim = next(m for m in sim["metrics"] if m["metric"] == "car")["value"]
    car_an = next(m for m in an["metrics"] if m["metric"] == "car[timetags]")["value"]
    assert car_an == pytest.approx(car_sim)


def test_analyze_counts_table(tmp_path):
    run("simulate", "--mode", "counts", "--duration", 10, "--out", tmp_path / "sim")
    assert run("analyze", tmp_path / "sim" / "counts.csv", "--kind", "car", "--out", tmp_path / "an") == 0
    assert (tmp_path / "an" / "car.csv").is_file()


def test_analyze_rejects_malformed_counts(tmp_path):
    f = tmp_path / "c.csv"
    f.write_text("a,b\n1,2\n")
    assert run("analyze", f, "--out", tmp_path / "an") == cli.EXIT_CONFIG


def test_reproduce_writes_series(tmp_path):
    out = tmp_path / "chsh"
    assert run("reproduce", "chsh", "--seed", 2, "--out", out) == 0
    summary = json.loads((out / "summary.json").read_text())
    S = next(m for m in summary["metrics"] if m["metric"] == "S")
    assert S["value"] > 2
    assert any(p.name.endswith(".csv") for p in out.iterdir())


def test_reproduce_chsh_then_analyze(tmp_path):
    run("reproduce", "chsh", "--seed", 2, "--out", tmp_path / "r")
    counts = tmp_path / "r" / "chsh_counts.csv"
    assert run("analyze", counts, "--kind", "chsh", "--out", tmp_path / "an") == 0


def test_config_override_file(tmp_path):
    f = tmp_path / "o.toml"
    f.write_text("[pump]\npower_mw = 0.7\n")
    assert run("simulate", "--config", f, "--duration", 0.2, "--out", tmp_path / "o") == 0
    assert "power_mw = 0.7" in (tmp_path / "o" / "config.toml").read_text()


def test_selftest_passes(tmp_path, capsys):
    assert run("selftest", "--out", tmp_path) == cli.EXIT_OK
    text = capsys.readouterr().out
    assert "FAIL" not in text and text.count("PASS") >= 8
    assert (tmp_path / "selftest.json").is_file()


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "sfwmsim.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "sfwmsim" in r.stdout


def test_reproduce_tomo_then_analyze(tmp_path):
    assert run("reproduce", "tomo", "--seed", 1, "--out", tmp_path / "r") == 0
    assert run("analyze", tmp_path / "r" / "tomo_counts.csv", "--kind", "tomo", "--out", tmp_path / "an") == 0
    assert (tmp_path / "an" / "density_matrix.csv").is_file()
    # a counts table without accidentals cannot give a CAR
    assert run("analyze", tmp_path / "r" / "tomo_counts.csv", "--kind", "car", "--out", tmp_path / "x") == 3
