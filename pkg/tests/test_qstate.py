import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfwmsim import qstate
from conftest import random_density

R2 = 1 / math.sqrt(2)
seeds = st.integers(0, 2**32 - 1)
angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


# --- Bell and Sagnac states ---

def test_bell_phi_plus_amplitudes():
    np.testing.assert_allclose(qstate.bell_state("phi_plus").amplitudes, [R2, 0, 0, R2], atol=1e-15)


def test_bell_phi_minus_amplitudes():
    np.testing.assert_allclose(qstate.bell_state("phi_minus").amplitudes, [R2, 0, 0, -R2], atol=1e-15)


def test_bell_extra_phase_pi_gives_phi_minus():
    a = qstate.bell_state("phi_plus", math.pi).amplitudes
    b = qstate.bell_state("phi_minus").amplitudes
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_bell_psi_states_live_on_01_10():
    np.testing.assert_allclose(qstate.bell_state("psi_minus").amplitudes, [0, R2, -R2, 0], atol=1e-15)
    np.testing.assert_allclose(qstate.bell_state("psi_plus").amplitudes, [0, R2, R2, 0], atol=1e-15)


def test_unknown_bell_kind_rejected():
    with pytest.raises(ValueError):
        qstate.bell_state("phi_zero")


def test_ket_normalization_enforced():
    with pytest.raises(ValueError):
        qstate.Ket2Q(np.array([1, 1, 0, 0], dtype=complex))


def test_general_pair_state_eta1_is_phi_plus():
    np.testing.assert_allclose(qstate.general_pair_state(1.0, 0.0).matrix,
                               qstate.bell_state("phi_plus").density().matrix, atol=1e-12)


@given(angles)
def test_general_pair_state_eta0_is_hh(delta):
    m = qstate.general_pair_state(0.0, delta).matrix
    expect = np.zeros((4, 4))
    expect[0, 0] = 1
    np.testing.assert_allclose(m, expect, atol=1e-15)


def test_general_pair_state_quarter_phase_coherence():
    # hand expansion: (|HH> + i|VV>)/sqrt2 -> <HH|rho|VV> = (1/sqrt2)(conj(i)/sqrt2) = -i/2
    m = qstate.general_pair_state(1.0, math.pi / 2).matrix
    assert abs(m[0, 3] - (-0.5j)) < 1e-12


@given(angles)
def test_general_pair_state_is_pure(delta):
    assert abs(qstate.general_pair_state(1.0, delta).purity - 1) < 1e-10


# --- Born rule ---

def _pol(ts_deg, ti_deg):
    return qstate.polarizer_projector(math.radians(ts_deg), math.radians(ti_deg))


def test_born_hh():
    assert qstate.born_probability(qstate.bell_state("phi_plus"), _pol(0, 0)) == pytest.approx(0.5, abs=1e-12)


def test_born_orthogonal_arm():
    assert qstate.born_probability(qstate.bell_state("phi_plus"), _pol(0, 90)) == pytest.approx(0.0, abs=1e-12)


def test_born_rotated_pair():
    # <ts ti|Phi+> = cos(ts - ti)/sqrt2 for real linear polarizers
    p = qstate.born_probability(qstate.bell_state("phi_plus"), _pol(22.5, -22.5))
    assert p == pytest.approx(0.25, abs=1e-12)


def test_born_rejects_nonphysical():
    with pytest.raises(qstate.NonPhysicalStateError):
        qstate.born_probability(np.diag([0.5, 0.5, 0.5, -0.5]), _pol(0, 0))


@given(seeds, st.sampled_from("HVDARL"), st.sampled_from("HVDARL"))
def test_born_complete_set_sums_to_one(seed, a, b):
    rho = random_density(np.random.default_rng(seed))
    orth = {"H": "V", "V": "H", "D": "A", "A": "D", "R": "L", "L": "R"}
    total = sum(qstate.born_probability(rho, qstate.product_projector(qstate.qubit_ket(x), qstate.qubit_ket(y)))
                for x in (a, orth[a]) for y in (b, orth[b]))
    assert abs(total - 1) < 1e-9


@given(seeds, angles, angles)
def test_born_probability_in_unit_interval(seed, ts, ti):
    rho = random_density(np.random.default_rng(seed), rank=1)
    p = qstate.born_probability(rho, qstate.polarizer_projector(ts, ti))
    assert 0.0 <= p <= 1.0


# --- fidelity ---

def test_fidelity_identical_pure():
    phi = qstate.bell_state("phi_plus")
    assert qstate.fidelity(phi, phi) == pytest.approx(1.0, abs=1e-9)


def test_fidelity_mixed_vs_bell():
    assert qstate.fidelity(qstate.maximally_mixed(), qstate.bell_state("phi_plus")) == pytest.approx(0.25, abs=1e-9)


def test_fidelity_werner_0912():
    # (1 + 3p)/4 at p = 0.912
    F = qstate.fidelity(qstate.werner_state(0.912), qstate.bell_state("phi_plus"))
    assert F == pytest.approx(0.934, abs=1e-9)


@given(seeds)
def test_fidelity_symmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = random_density(rng), random_density(rng, rank=2)
    assert abs(qstate.fidelity(a, b) - qstate.fidelity(b, a)) < 1e-9


@given(seeds)
def test_fidelity_pure_target_matches_overlap(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng)
    psi = qstate.Ket2Q.normalized(rng.normal(size=4) + 1j * rng.normal(size=4))
    assert abs(qstate.fidelity(rho, psi) - qstate.pure_state_fidelity(rho, psi)) < 1e-9


@given(seeds)
def test_fidelity_bounds(seed):
    rng = np.random.default_rng(seed)
    assert 0.0 <= qstate.fidelity(random_density(rng), random_density(rng)) <= 1.0


# --- physicality ---

def test_physical_mixed():
    assert qstate.is_physical(np.eye(4) / 4)


def test_negative_eigenvalue_flagged():
    rep = qstate.is_physical(np.diag([0.5, 0.5, 0.5, -0.5]))
    assert not rep
    assert any("negative eigenvalue" in p for p in rep.problems)


def test_wrong_trace_flagged():
    rep = qstate.is_physical(1.1 * qstate.bell_state("phi_plus").density().matrix)
    assert not rep
    assert any("trace" in p for p in rep.problems)


def test_non_hermitian_flagged():
    m = np.eye(4, dtype=complex) / 4
    m[0, 1] = 0.1
    assert any("Hermitian" in p for p in qstate.is_physical(m).problems)


def test_density_matrix_rejects_nonphysical():
    with pytest.raises(qstate.NonPhysicalStateError):
        qstate.DensityMatrix(np.diag([0.5, 0.5, 0.5, -0.5]))


def test_raw_matrix_allows_nonphysical():
    raw = qstate.RawMatrix(np.diag([0.5, 0.5, 0.5, -0.5]))
    assert not raw.check()


@given(seeds)
def test_density_pairs_round_trip(seed):
    rho = random_density(np.random.default_rng(seed))
    back = qstate.DensityMatrix.from_pairs(rho.to_pairs())
    np.testing.assert_array_equal(back.matrix, rho.matrix)


def test_projector_must_be_idempotent():
    with pytest.raises(ValueError):
        qstate.Projector(np.eye(4) * 0.5)


@given(angles, angles)
def test_polarizer_projector_idempotent(ts, ti):
    P = qstate.polarizer_projector(ts, ti).matrix
    np.testing.assert_allclose(P @ P, P, atol=1e-10)
