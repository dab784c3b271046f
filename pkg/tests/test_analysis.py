import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfwmsim import qstate
from sfwmsim.analysis import (FitError, car_from_counts, car_model, chsh, chsh_probabilities, fidelity_with_error,
                              fit_car_curve, fit_fringe, fit_log_slope, fit_singles_curve, linear_tomography,
                              mle_tomography, setting_angles, setting_label, to_json)
from sfwmsim.analysis import tomography as tomo
from conftest import random_density, random_product_ket

finite = dict(allow_nan=False, allow_infinity=False)
seeds = st.integers(0, 2**32 - 1)
PHI = np.linspace(0, 2 * np.pi, 13)[:-1]


# --- CAR ---

def test_car_ratio_and_error():
    c = car_from_counts(800, 10)
    assert c.value == 80.0
    assert c.error == pytest.approx(80 * math.sqrt(1 / 800 + 1 / 10))
    assert not c.lower_bound


def test_car_zero_accidentals_is_lower_bound():
    c = car_from_counts(50, 0)
    assert c.lower_bound and c.value == 50.0
    assert str(c).startswith(">=")


def test_car_rejects_negative():
    with pytest.raises(ValueError):
        car_from_counts(-1, 3)


# --- fringes ---

def test_noiseless_fringe_recovers_visibility():
    y = 1000 * (1 + 0.9 * np.cos(PHI - 0.4))
    f = fit_fringe(PHI, y)
    assert f.visibility_raw == pytest.approx(0.9, abs=1e-6)
    assert f.phase == pytest.approx(0.4, abs=1e-6)


def test_free_frequency_fit_recovers_period():
    x = np.linspace(0, 4 * np.pi, 40)
    y = 500 * (1 + 0.8 * np.cos(2.05 * x + 1.0))
    f = fit_fringe(x, y, frequency=2.0, free_frequency=True)
    assert f.frequency == pytest.approx(2.05, rel=1e-6)
    assert f.period == pytest.approx(2 * np.pi / 2.05, rel=1e-6)


@given(st.floats(0.05, 0.99, **finite), st.floats(1.0, 1e6, **finite), st.floats(-3, 3, **finite))
def test_fringe_visibility_scale_invariant(V, k, p0):
    y = 1000 * (1 + V * np.cos(PHI - p0))
    a, b = fit_fringe(PHI, y), fit_fringe(PHI, k * y)
    assert abs(a.visibility_raw - b.visibility_raw) < 1e-9


@given(st.floats(0.2, 1.0, **finite), st.floats(0.0, 0.45, **finite))
def test_background_dilutes_visibility(V, frac):
    # C(1 + V cos) + 2B: raw visibility V C / (C + 2B); net recovers V
    C = 1000.0
    B = frac * C
    y = C * (1 + V * np.cos(PHI)) + 2 * B
    f = fit_fringe(PHI, y, accidental=2 * B)
    assert f.visibility_raw == pytest.approx(V * C / (C + 2 * B), abs=1e-8)
    assert f.visibility_net == pytest.approx(V, abs=1e-8)


def test_net_at_least_raw_with_background():
    y = 100 * (1 + 0.7 * np.cos(PHI)) + 30
    f = fit_fringe(PHI, y, accidental=30)
    assert f.visibility_net >= f.visibility_raw


def test_fringe_background_too_large():
    y = 100 * (1 + 0.5 * np.cos(PHI))
    with pytest.raises(FitError):
        fit_fringe(PHI, y, accidental=150)


@pytest.mark.parametrize("x, y", [(PHI[:3], np.ones(3)), (np.linspace(0, 1, 8), np.ones(8)),
                                  (PHI, -np.ones(PHI.size)), (PHI, np.zeros(PHI.size))])
def test_fringe_rejects_bad_input(x, y):
    with pytest.raises(ValueError):
        fit_fringe(x, y)


# --- CHSH ---

def test_chsh_bell_state_tsirelson():
    assert chsh(chsh_probabilities(qstate.bell_state("phi_plus"))).S == pytest.approx(2 * math.sqrt(2), abs=1e-9)


def test_chsh_werner():
    S = chsh(chsh_probabilities(qstate.werner_state(0.94))).S
    assert S == pytest.approx(2.658721, abs=1e-6)


@given(seeds)
def test_chsh_separable_bound(seed):
    rng = np.random.default_rng(seed)
    psi = random_product_ket(rng)
    assert abs(chsh(chsh_probabilities(psi)).S) <= 2 + 1e-9


@given(seeds)
@settings(max_examples=30)
def test_chsh_any_state_within_tsirelson(seed):
    rho = random_density(np.random.default_rng(seed))
    assert abs(chsh(chsh_probabilities(rho)).S) <= 2 * math.sqrt(2) + 1e-9


def test_chsh_accepts_string_labels():
    p = chsh_probabilities(qstate.bell_state("phi_plus"))
    by_label = {setting_label(a, b): 1e4 * v for (a, b), v in p.items()}
    assert chsh(by_label).S == pytest.approx(2 * math.sqrt(2), abs=1e-9)


def test_chsh_missing_setting():
    p = chsh_probabilities(qstate.bell_state("phi_plus"))
    p.pop(setting_angles()[0])
    with pytest.raises(ValueError, match="missing"):
        chsh(p)


def test_chsh_error_shrinks_with_counts():
    p = chsh_probabilities(qstate.werner_state(0.94))
    small = chsh({k: 100 * v for k, v in p.items()})
    big = chsh({k: 10000 * v for k, v in p.items()})
    assert big.S_err == pytest.approx(small.S_err / 10, rel=1e-9)
    assert big.violation_sigma > small.violation_sigma


# --- tomography ---

@given(seeds)
@settings(max_examples=30)
def test_linear_inversion_exact_on_ideal_counts(seed):
    rho = random_density(np.random.default_rng(seed))
    est = linear_tomography(tomo.ideal_counts(rho, 1000.0))
    np.testing.assert_allclose(est.matrix, rho.matrix, atol=1e-10)


def test_mle_on_ideal_werner_counts():
    rho = qstate.werner_state(0.912)
    fit = mle_tomography(tomo.ideal_counts(rho, 1e5))
    assert fit.converged
    assert qstate.fidelity(fit.rho, qstate.bell_state("phi_plus")) == pytest.approx(0.934, abs=1e-4)


@given(seeds)
@settings(max_examples=20)
def test_mle_is_physical_on_random_counts(seed):
    rng = np.random.default_rng(seed)
    counts = {s: int(rng.integers(0, 50)) for s in tomo.JAMES_SETTINGS}
    counts["HH"] += 1
    fit = mle_tomography(counts)
    assert qstate.is_physical(fit.rho.matrix)


@given(seeds)
@settings(max_examples=20)
def test_nll_gradient_matches_finite_difference(seed):
    rng = np.random.default_rng(seed)
    P = tomo.projectors()
    n = np.array(list(tomo.sample_counts(random_density(rng), 500, rng).values()), float)
    t = rng.normal(size=16)
    g = tomo.nll_gradient(t, P, n)
    h = 1e-6
    fd = np.array([(tomo.neg_log_likelihood(t + h * e, P, n) - tomo.neg_log_likelihood(t - h * e, P, n)) / (2 * h)
                   for e in np.eye(16)])
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) < 1e-5


def test_params_round_trip():
    rho = random_density(np.random.default_rng(3)).matrix
    np.testing.assert_allclose(tomo.rho_from_params(tomo.params_from_rho(rho, floor=0.0)), rho, atol=1e-12)


def test_fidelity_approaches_one_with_statistics():
    bell = qstate.bell_state("phi_plus")
    rng = np.random.default_rng(7)
    infid = []
    for n in (1e2, 1e4, 1e6):
        # average a few draws so the trend is not a single-sample accident
        vals = [1 - qstate.fidelity(mle_tomography(tomo.sample_counts(bell, n, rng)).rho, bell) for _ in range(5)]
        infid.append(np.mean(vals))
    assert infid[0] > infid[1] > infid[2]
    assert infid[2] < 1e-3


def test_bootstrap_error_scales_with_counts():
    rho = qstate.werner_state(0.9)
    rng = np.random.default_rng(1)
    bell = qstate.bell_state("phi_plus")
    lo = fidelity_with_error(tomo.sample_counts(rho, 1e3, rng), bell, 100, seed=1)
    hi = fidelity_with_error(tomo.sample_counts(rho, 1e5, rng), bell, 100, seed=1)
    # sigma ~ 1/sqrt(N): a factor 10 for a factor 100 in counts
    assert 5 < lo.error / hi.error < 20


def test_bootstrap_needs_enough_resamples():
    with pytest.raises(ValueError):
        fidelity_with_error(tomo.ideal_counts(qstate.werner_state(0.9), 100), qstate.bell_state("phi_plus"), 10)


def test_tomography_rejects_empty_counts():
    with pytest.raises(ValueError):
        mle_tomography({s: 0 for s in tomo.JAMES_SETTINGS})


# --- power-curve fits ---

def test_singles_pure_quadratic():
    P = np.linspace(0.5, 4, 8)
    fit = fit_singles_curve(P, 1234.0 * P**2)
    assert fit.a == pytest.approx(1234.0, rel=1e-9)
    assert fit.b == pytest.approx(0.0, abs=1e-6) and fit.d == pytest.approx(0.0, abs=1e-6)


def test_singles_rejects_saturated_rates():
    with pytest.raises(ValueError):
        fit_singles_curve([1, 2, 3, 4], [1e5, 2e5, 3e5, 4e5], dead_time=5e-6)


def test_car_fit_round_trip():
    T, tau = 0.0224404, 0.8e-9
    xi, raman, dark = 73589.79, 877000.0, 3000.0
    P = np.geomspace(0.05, 10, 14)
    fit = fit_car_curve(P, car_model(P, xi, raman, dark, T, tau), T, tau)
    assert fit.xi == pytest.approx(xi, rel=0.02)
    assert fit.raman == pytest.approx(raman, rel=0.02)
    assert fit.dark == pytest.approx(dark, rel=0.02)
    assert not fit.degenerate
    assert fit.peak_power == pytest.approx(math.sqrt(dark / (T * xi)), rel=0.02)


def test_car_fit_flags_monotone_data():
    T, tau = 0.0224404, 0.8e-9
    P = np.geomspace(2, 10, 6)
    fit = fit_car_curve(P, car_model(P, 7e4, 9e5, 3000, T, tau), T, tau)
    assert fit.degenerate


@given(st.floats(-3, 3, **finite), st.floats(0.1, 100, **finite))
def test_log_slope_exact_power_law(k, a):
    x = np.geomspace(0.1, 10, 7)
    assert fit_log_slope(x, a * x**k).slope == pytest.approx(k, abs=1e-9)


# --- reports ---

def test_json_is_deterministic_and_rounded():
    s = to_json({"b": 1 / 3, "a": [np.float64(2.0), np.int64(4)]})
    assert s == to_json({"a": [2.0, 4], "b": 1 / 3})
    assert "0.333333333333" in s and "0.3333333333333" not in s
