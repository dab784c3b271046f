import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfwmsim import photonics as ph
from sfwmsim.engine import (ScenarioError, apply_dead_time, count_coincidences, count_in_window,
                            counts_from_timetags, default_accidental_offset, delay_histogram, expected_rates,
                            read_binary, read_csv, sample_counts, simulate, simulate_counts, window_ps,
                            write_binary, write_csv, Setting, TimeTagStream)

sorted_tags = st.lists(st.integers(0, 10**7), max_size=300, unique=True).map(sorted)


def _short(rc, duration=0.5, **kw):
    return replace(rc.scenario, duration=duration, **kw)


# --- scenario validation ---

def test_scenario_rejects_bad_duration(et_config):
    with pytest.raises(ScenarioError):
        replace(et_config.scenario, duration=0.0)


def test_scenario_rejects_pulsed_energy_time(et_config):
    with pytest.raises(ScenarioError):
        replace(et_config.scenario, pump=ph.PumpParams("pulsed", 1.0))


def test_scenario_rejects_bad_pair(et_config):
    with pytest.raises(ScenarioError):
        replace(et_config.scenario, channel_pair=15)


def test_setting_rejects_bad_basis():
    with pytest.raises(ScenarioError):
        Setting(basis="HX")


def test_config_hash_depends_on_seed(et_config):
    sc = et_config.scenario
    assert sc.config_hash() != replace(sc, seed=sc.seed + 1).config_hash()
    assert sc.config_hash() == replace(sc).config_hash()


def test_window_rounding():
    assert window_ps(0.8e-9) == 800
    with pytest.raises(ValueError):
        window_ps(0.75e-9)


# --- time-tag generation ---

def test_identical_scenarios_give_identical_streams(et_config):
    sc = _short(et_config, seed=17)
    a, b = simulate(sc), simulate(sc)
    for k in a.streams:
        np.testing.assert_array_equal(a.streams[k].timestamps, b.streams[k].timestamps)


def test_parallel_blocks_match_serial(et_config):
    sc = _short(et_config, 0.6, seed=5)
    a, b = simulate(sc), simulate(sc, workers=3)
    for k in a.streams:
        np.testing.assert_array_equal(a.streams[k].timestamps, b.streams[k].timestamps)


def test_seed_changes_streams(et_config):
    a = simulate(_short(et_config, seed=1))
    b = simulate(_short(et_config, seed=2))
    assert not np.array_equal(a.signal.timestamps, b.signal.timestamps)


def test_zero_pump_no_darks_gives_empty_streams(et_config):
    sc = _short(et_config).with_power(0.0)
    dark_free = replace(sc.detector_s, dark_rate=0.0)
    sc = replace(sc, detector_s=dark_free, detector_i=replace(sc.detector_i, dark_rate=0.0))
    r = simulate(sc)
    assert len(r.signal) == 0 and len(r.idler) == 0


def test_streams_strictly_increasing_and_in_range(et_config):
    sc = _short(et_config, seed=3)
    r = simulate(sc)
    for s in r.streams.values():
        assert np.all(np.diff(s.timestamps) > 0)
        assert s.timestamps[0] >= 0 and s.timestamps[-1] < sc.duration * 1e12


def test_dead_time_respected_at_high_power(et_config):
    sc = _short(et_config, seed=8).with_power(6.0)
    r = simulate(sc)
    assert r.signal.min_gap() >= round(sc.detector_s.dead_time * 1e12)
    assert r.idler.min_gap() >= round(sc.detector_i.dead_time * 1e12)


@given(sorted_tags, st.integers(1, 10**6))
def test_apply_dead_time_property(tags, dead):
    t = np.array(tags, dtype=np.int64)
    kept = apply_dead_time(t, dead)
    assert set(kept.tolist()) <= set(tags)
    assert kept.size == 0 or np.all(np.diff(kept) >= dead)
    if t.size:
        assert kept[0] == t[0]
    # every dropped tag falls within the dead time of the last kept one before it
    dropped = t[~np.isin(t, kept)]
    prev = kept[np.searchsorted(kept, dropped, side="right") - 1]
    assert np.all(dropped - prev < dead)


def test_born_rule_zero_gives_no_true_coincidences(pol_config):
    # crossed polarizers on a pure Phi+ state: no pairs reach both detectors
    sc = replace(pol_config.scenario, intrinsic_visibility=1.0).with_setting(theta_s=0.0, theta_i=90.0)
    e = expected_rates(sc, pol_config.window)
    assert e.true == pytest.approx(0.0, abs=1e-9)


def test_direct_detection_single_peak(et_config):
    sc = _short(et_config, 2.0, seed=12).with_setting(analyzers=False)
    r = simulate(sc)
    h = count_coincidences(r.signal, r.idler, window_ps(0.8e-9), 0, default_accidental_offset(sc), span_ps=8000)
    assert h.window_total > 20 * max(h.accidental_total, 1)


def test_three_peaks_one_two_one(et_config):
    sc = _short(et_config, 30.0, seed=4).with_power(3.0).with_setting(phase_randomized=True)
    r = simulate(sc)
    d = int(round(sc.umis[0].delay * 1e12))
    h = count_coincidences(r.signal, r.idler, 800, 0, default_accidental_offset(sc), span_ps=4 * d)
    acc = h.accidental_total
    left, mid, right = (h.area(c) - acc for c in (-d, 0, d))
    sigma = math.sqrt(h.area(0) + h.area(-d) + h.area(d) + 4 * acc)
    assert abs(mid - (left + right)) < 4 * sigma
    assert abs(left - right) < 4 * math.sqrt(h.area(-d) + h.area(d))


def test_accidental_rate_oracle(et_config):
    # no pairs at all: coincidences are purely S_s S_i tau T
    sc = _short(et_config, 50.0, seed=9).with_power(2.0).with_setting(analyzers=False)
    sc = replace(sc, source=replace(sc.source, xi=0.0))
    r = simulate(sc)
    tau = 3.2e-9
    n = count_in_window(r.signal, r.idler, window_ps(tau))
    expect = len(r.signal) * len(r.idler) * tau / sc.duration
    assert abs(n - expect) < 4 * math.sqrt(expect)


def test_cw_car_matches_prediction(cw_car_config):
    sc = replace(cw_car_config.scenario, duration=60.0, seed=21)
    tau = cw_car_config.window
    r = simulate(sc)
    row = counts_from_timetags(r, tau)
    car = row.coincidences / row.accidentals
    sigma = car * math.sqrt(1 / row.coincidences + 1 / row.accidentals)
    e = expected_rates(sc, tau)
    assert abs(car - e.window / e.accidental) < 3 * sigma


def test_counts_and_timetags_agree(et_config):
    sc = _short(et_config, 20.0, seed=31).with_setting(phi_s=0.7)
    tau = et_config.window
    tt = counts_from_timetags(simulate(sc), tau)
    cm = sample_counts(sc, tau)
    for f in ("coincidences", "accidentals", "singles_s", "singles_i"):
        a, b = getattr(tt, f), getattr(cm, f)
        assert abs(a - b) < 4 * math.sqrt(a + b + 1), f


# --- counts mode ---

def test_counts_mode_deterministic(et_config):
    sc = _short(et_config, 5.0, seed=2)
    assert sample_counts(sc, 0.8e-9) == sample_counts(sc, 0.8e-9)
    assert sample_counts(sc, 0.8e-9) != sample_counts(replace(sc, seed=3), 0.8e-9)


def test_counts_record_labels(et_config):
    settings = [Setting(phi_s=0.0, label="a"), Setting(phi_s=math.pi, label="b")]
    rec = simulate_counts(_short(et_config, 5.0), 0.8e-9, settings)
    assert list(rec.by_label()) == ["a", "b"]
    assert rec.column("coincidences")[0] > rec.column("coincidences")[1]


def test_expected_rates_rejects_zero_window(et_config):
    with pytest.raises(ValueError):
        expected_rates(et_config.scenario, 0.0)


# --- coincidence counting ---

def test_identical_streams_count_their_length():
    t = np.arange(0, 10**7, 5000, dtype=np.int64)
    assert count_in_window(t, t, 800) == t.size


def test_window_is_half_open():
    a = np.array([1000], dtype=np.int64)
    assert count_in_window(a, a - 400, 800) == 1
    assert count_in_window(a, a + 400, 800) == 0


@given(sorted_tags, sorted_tags, st.integers(-2000, 2000))
def test_histogram_window_matches_direct_count(a, b, offset):
    a, b = np.array(a, np.int64), np.array(b, np.int64)
    h = count_coincidences(a, b, 800, offset * 100)
    assert h.counts[h.window_bins()].sum() == h.window_total
    brute = sum(1 for x in a for y in b if -400 <= y - x - offset * 100 < 400)
    assert h.window_total == brute


@given(sorted_tags, sorted_tags)
def test_delay_histogram_total(a, b):
    a, b = np.array(a, np.int64), np.array(b, np.int64)
    hist = delay_histogram(a, b, -5000, 100, 100)
    brute = sum(1 for x in a for y in b if -5000 <= y - x < 5000)
    assert hist.sum() == brute


def test_unsorted_input_rejected():
    with pytest.raises(ValueError):
        count_in_window(np.array([5, 1]), np.array([1, 2]), 800)


def test_odd_window_rejected():
    with pytest.raises(ValueError):
        count_coincidences(np.array([1]), np.array([1]), 300)


# --- file formats ---

def test_binary_round_trip(tmp_path, et_config):
    sc = _short(et_config, 0.2, seed=6)
    r = simulate(sc)
    p = tmp_path / "tags.bin"
    write_binary(p, r.streams.values(), sc.seed, sc.config_hash())
    streams, meta = read_binary(p, sc.duration)
    assert meta["seed"] == sc.seed and meta["scenario_hash"] == sc.config_hash()
    for k, s in r.streams.items():
        np.testing.assert_array_equal(streams[k].timestamps, s.timestamps)


def test_binary_bytes_reproducible(tmp_path, et_config):
    sc = _short(et_config, 0.2, seed=6)
    blobs = []
    for k in range(2):
        p = tmp_path / f"t{k}.bin"
        write_binary(p, simulate(sc).streams.values(), sc.seed, sc.config_hash())
        blobs.append(p.read_bytes())
    assert blobs[0] == blobs[1]


def test_binary_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.bin"
    p.write_bytes(b"NOTTAGS" * 20)
    with pytest.raises(ValueError):
        read_binary(p)


def test_csv_round_trip(tmp_path):
    streams = [TimeTagStream(0, np.array([5, 10, 400])), TimeTagStream(1, np.array([7, 9]))]
    p = tmp_path / "t.csv"
    write_csv(p, streams)
    back = read_csv(p)
    np.testing.assert_array_equal(back[0].timestamps, [5, 10, 400])
    np.testing.assert_array_equal(back[1].timestamps, [7, 9])


def test_stream_rejects_unsorted():
    with pytest.raises(ValueError):
        TimeTagStream(0, np.array([3, 2]))
