"""Analytic source, detector and interferometer models.

Everything the Monte Carlo engine samples from and the fitters fit to lives
here: singles and coincidence rates, the CAR model, thermal phase tuning of
the unbalanced Michelson interferometers, fringe laws, the Sagnac output
state, spectral brightness, and the branch tables that say where each photon
of a pair ends up after the analyzers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from . import qstate
from .channels import N_PAIRS, SPEED_OF_LIGHT


def db_to_transmission(db: float) -> float:
    return 10.0 ** (-db / 10.0)


# --- parameter records ------------------------------------------------------

def linear_noise_profile(slope: float, reference_pair: int = 8) -> tuple[float, ...]:
    """Noise multipliers for pairs 1..14, linear in detuning, 1 at the reference pair.

    A positive slope makes noise fall with detuning.
    """
    prof = tuple(1.0 + slope * (reference_pair - k) for k in range(1, N_PAIRS + 1))
    if min(prof) < 0:
        raise ValueError("noise profile slope drives a multiplier negative")
    return prof


@dataclass(frozen=True)
class SourceParams:
    """SFWM pair and noise coefficients.

    ``xi`` is in pairs/s/mW^2 and the Raman terms in counts/s/mW, all referred
    to the chip output (before arm losses). ``noise_profile`` holds one noise
    multiplier per channel pair (index 0 is pair 1).
    """

    xi: float
    raman_s: float
    raman_i: float
    noise_profile: tuple[float, ...] = (1.0,) * N_PAIRS
    pulsed_xi: float = 0.0
    pulsed_raman_factor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "noise_profile", tuple(float(x) for x in self.noise_profile))
        if len(self.noise_profile) != N_PAIRS:
            raise ValueError(f"noise_profile needs {N_PAIRS} entries")
        for name in ("xi", "raman_s", "raman_i", "pulsed_xi", "pulsed_raman_factor"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if min(self.noise_profile) < 0:
            raise ValueError("noise multipliers must be >= 0")

    def raman(self, arm: str, pair: int = 8) -> float:
        base = {"s": self.raman_s, "signal": self.raman_s, "i": self.raman_i, "idler": self.raman_i}[arm]
        return base * self.noise_profile[pair - 1]


@dataclass(frozen=True)
class DetectorParams:
    efficiency: float
    dark_rate: float
    dead_time: float
    gated: bool = False
    gate_rate: float = 100e6
    gate_width: float = 1e-9
    gate_offset: float = 0.0  # gate centre relative to the pump pulse, s
    jitter: float = 0.0  # Gaussian sigma, s

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("detector efficiency must lie in [0, 1]")
        if self.dark_rate < 0 or self.dead_time < 0 or self.jitter < 0:
            raise ValueError("dark rate, dead time and jitter must be >= 0")
        if self.gated and (self.gate_rate <= 0 or self.gate_width <= 0):
            raise ValueError("gated detector needs positive gate rate and width")


@dataclass(frozen=True)
class ArmLossBudget:
    output_coupling_db: float = 5.5
    filter_db: float = 4.0
    detector_efficiency: float = 0.2
    extra_db: float = 0.0

    def __post_init__(self):
        if min(self.output_coupling_db, self.filter_db, self.extra_db) < 0:
            raise ValueError("losses in dB must be >= 0")
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ValueError("detector efficiency must lie in [0, 1]")

    @property
    def transmission(self) -> float:
        db = self.output_coupling_db + self.filter_db + self.extra_db
        return db_to_transmission(db) * self.detector_efficiency


@dataclass(frozen=True)
class PumpParams:
    mode: str = "cw"  # "cw" | "pulsed"
    power_mw: float = 1.37
    rep_rate: float = 100e6
    pulse_width: float = 25e-12

    def __post_init__(self):
        if self.mode not in ("cw", "pulsed"):
            raise ValueError(f"pump mode must be 'cw' or 'pulsed', got {self.mode!r}")
        if self.power_mw < 0:
            raise ValueError("pump power must be >= 0")
        if self.mode == "pulsed" and self.rep_rate <= 0:
            raise ValueError("pulsed pump needs a positive repetition rate")

    @property
    def pulsed(self) -> bool:
        return self.mode == "pulsed"

    @property
    def duty_cycle(self) -> float:
        return self.pulse_width * self.rep_rate

    def with_power(self, power_mw: float) -> "PumpParams":
        return replace(self, power_mw=power_mw)


@dataclass(frozen=True)
class UMIParams:
    delay: float = 1.6e-9
    group_index: float = 1.4670
    dn_dT: float = 0.811e-5
    wavelength: float = 1550e-9
    double_pass: bool = True
    length_difference: float | None = None  # m; derived from delay when None
    long_fraction: float = 0.5  # power splitting towards the long arm

    def __post_init__(self):
        if not 0.0 < self.long_fraction < 1.0:
            raise ValueError("long_fraction must lie strictly between 0 and 1")
        if self.length_difference is not None and self.delay > 0:
            derived = fiber_length_difference(self.delay, self.group_index, self.double_pass)
            if abs(self.length_difference - derived) > 1e-3 * derived:
                raise ValueError(
                    f"length difference {self.length_difference} m inconsistent with "
                    f"delay {self.delay} s (expects {derived:.6g} m)")

    @property
    def arm_length_difference(self) -> float:
        if self.length_difference is not None:
            return self.length_difference
        return fiber_length_difference(self.delay, self.group_index, self.double_pass)


@dataclass(frozen=True)
class SagnacParams:
    pump_phase: float = 0.0
    birefringence: float = 0.0  # rad/m
    loop_length: float = 0.0  # m
    power_ratio: float = 1.0

    def __post_init__(self):
        if self.power_ratio < 0:
            raise ValueError("power ratio eta must be >= 0")

    @property
    def delta(self) -> float:
        return 2.0 * (self.pump_phase + self.birefringence * self.loop_length)


# --- rates and CAR ----------------------------------------------------------

def dead_time_corrected(rate, dead_time: float):
    """Observed rate of a non-paralyzable detector."""
    rate = np.asarray(rate, dtype=float)
    out = rate / (1.0 + rate * dead_time)
    return float(out) if out.ndim == 0 else out


def singles_rate(p: SourceParams, d: DetectorParams, arm_transmission: float, pump_mw,
                 arm: str = "s", pair: int = 8):
    """Raw click rate of one arm: T (xi P^2 + raman P) + dark."""
    pump_mw = np.asarray(pump_mw, dtype=float)
    if np.any(pump_mw < 0):
        raise ValueError("pump power must be >= 0")
    r = arm_transmission * (p.xi * pump_mw**2 + p.raman(arm, pair) * pump_mw) + d.dark_rate
    return float(r) if r.ndim == 0 else r


def observed_singles_rate(p, d, arm_transmission, pump_mw, arm="s", pair=8):
    return dead_time_corrected(singles_rate(p, d, arm_transmission, pump_mw, arm, pair), d.dead_time)


def _window_dark_probability(d: DetectorParams, tau: float, rep_rate: float) -> float:
    """Dark-click probability inside one coincidence window of a pulsed run."""
    if d.gated:
        return d.dark_rate / d.gate_rate * min(tau, d.gate_width) / d.gate_width
    return d.dark_rate * tau


def pulsed_mean_numbers(p: SourceParams, t_s: float, t_i: float, pump: PumpParams, pair: int = 8):
    """Per-pulse means: pairs, and noise photons reaching each detector."""
    f = pump.rep_rate
    mu = p.pulsed_xi * pump.power_mw**2 / f
    n_s = t_s * p.pulsed_raman_factor * p.raman("s", pair) * pump.power_mw / f
    n_i = t_i * p.pulsed_raman_factor * p.raman("i", pair) * pump.power_mw / f
    return mu, n_s, n_i


def _pulsed_window_probabilities(p, det_s, det_i, t_s, t_i, pump, tau, pair):
    mu, n_s, n_i = pulsed_mean_numbers(p, t_s, t_i, pump, pair)
    lam_s = mu * t_s + n_s
    lam_i = mu * t_i + n_i
    joint = mu * t_s * t_i
    w_s = _window_dark_probability(det_s, tau, pump.rep_rate)
    w_i = _window_dark_probability(det_i, tau, pump.rep_rate)
    q_s = (1 - w_s) * math.exp(-lam_s)  # no click at s in the window
    q_i = (1 - w_i) * math.exp(-lam_i)
    same = 1 - q_s - q_i + q_s * q_i * math.exp(joint)
    other = (1 - q_s) * (1 - q_i)
    return same, other


def predicted_car(p: SourceParams, det_s: DetectorParams, det_i: DetectorParams,
                  t_s: float, t_i: float, pump: PumpParams | float, tau: float, pair: int = 8) -> float:
    """Coincidence-to-accidental ratio, 1 + C_true / C_acc.

    CW: C_true = xi P^2 T_s T_i and C_acc = S_s S_i tau. Dead-time losses
    thin true and accidental coincidences by the same live fractions and
    cancel in the ratio, so raw singles are used on both sides.
    Pulsed: exact per-pulse Poisson click probabilities for the zero-delay
    window against the one-period-offset window.
    """
    if tau <= 0:
        raise ValueError("coincidence window must be positive")
    if not isinstance(pump, PumpParams):
        pump = PumpParams("cw", float(pump))
    if pump.pulsed:
        same, other = _pulsed_window_probabilities(p, det_s, det_i, t_s, t_i, pump, tau, pair)
        return same / other if other > 0 else math.inf
    P = pump.power_mw
    true = p.xi * P * P * t_s * t_i
    acc = (singles_rate(p, det_s, t_s, P, "s", pair) * singles_rate(p, det_i, t_i, P, "i", pair) * tau)
    if acc == 0:
        return math.inf
    return 1.0 + true / acc


def car_vs_window(p, det_s, det_i, t_s, t_i, pump, taus, pair: int = 8) -> np.ndarray:
    return np.array([predicted_car(p, det_s, det_i, t_s, t_i, pump, float(t), pair)
                     for t in np.atleast_1d(taus)])


def car_vs_power(p, det_s, det_i, t_s, t_i, pump: PumpParams, powers, tau, pair: int = 8) -> np.ndarray:
    return np.array([predicted_car(p, det_s, det_i, t_s, t_i, pump.with_power(float(P)), tau, pair)
                     for P in np.atleast_1d(powers)])


def raw_visibility_from_car(r: float) -> float:
    """Raw fringe visibility for a perfect state with true/accidental ratio r."""
    return r / (r + 2.0)


# --- interferometers --------------------------------------------------------

def fiber_length_difference(delay: float, group_index: float, double_pass: bool = True) -> float:
    passes = 2.0 if double_pass else 1.0
    return SPEED_OF_LIGHT * delay / (passes * group_index)


def umi_period(u: UMIParams) -> float:
    """Temperature change (K) that advances the UMI phase by 2 pi."""
    L = u.arm_length_difference
    if L == 0:
        raise ValueError("UMI arm length difference is zero")
    passes = 2.0 if u.double_pass else 1.0
    return u.wavelength / (passes * L * u.dn_dT)


def umi_phase(u: UMIParams, delta_T: float) -> float:
    return 2.0 * math.pi * delta_T / umi_period(u)


def _check_visibility(V):
    if np.any(np.asarray(V) < 0) or np.any(np.asarray(V) > 1):
        raise ValueError("visibility must lie in [0, 1]")


def energy_time_fringe(total_phase, visibility=1.0):
    """Probability that a central-peak pair leaves through both monitored ports."""
    _check_visibility(visibility)
    return 0.25 * (1.0 + visibility * np.cos(total_phase))


def time_bin_fringe(phi_p, phi_s, phi_i, visibility=1.0):
    _check_visibility(visibility)
    return 1.0 - visibility * np.cos(2.0 * phi_p - phi_s - phi_i)


def sagnac_output_state(s: SagnacParams) -> qstate.DensityMatrix:
    return qstate.general_pair_state(s.power_ratio, s.delta)


def spectral_brightness(coincidence_rate: float, arm_s: ArmLossBudget, arm_i: ArmLossBudget,
                        pump_mw: float, bandwidth_nm: float) -> float:
    """Pairs per (s nm mW) at the chip, after undoing the arm losses."""
    if coincidence_rate <= 0 or pump_mw <= 0 or bandwidth_nm <= 0:
        raise ValueError("coincidence rate, pump power and bandwidth must be positive")
    t = arm_s.transmission * arm_i.transmission
    if t == 0:
        raise ValueError("zero arm transmission")
    return coincidence_rate / (t * bandwidth_nm * pump_mw)


# --- branch tables ----------------------------------------------------------
#
# A branch table maps (reach_s, reach_i, slot_s, slot_i) -> probability for
# one pair, where reach_* says whether the photon exits towards its detector
# and slot_* is its delay in units of the interferometer imbalance. Singles
# tables map (reach, slot) -> probability for an unpaired photon.

@dataclass(frozen=True)
class Branches:
    pair: Mapping[tuple, float]
    signal: Mapping[tuple, float]
    idler: Mapping[tuple, float]
    noise_signal: Mapping[tuple, float] = field(default_factory=lambda: {(True, 0): 1.0})
    noise_idler: Mapping[tuple, float] = field(default_factory=lambda: {(True, 0): 1.0})
    slot: float = 0.0  # seconds per slot


def _michelson_amp(port: int, path: int, phi: float, long_fraction: float) -> complex:
    t, r = math.sqrt(1 - long_fraction), math.sqrt(long_fraction)
    if path == 0:
        return t * t if port == 0 else t * r
    return (r * r if port == 0 else -t * r) * np.exp(1j * phi)


def _marginals(pair: Mapping[tuple, float]):
    sig: dict = {}
    idl: dict = {}
    for (rs, ri, ss, si), p in pair.items():
        sig[(rs, ss)] = sig.get((rs, ss), 0.0) + p
        idl[(ri, si)] = idl.get((ri, si), 0.0) + p
    return sig, idl


def _single_michelson(long_fraction: float, offset: int = 0) -> dict:
    out: dict = {}
    for port in (0, 1):
        for path in (0, 1):
            key = (port == 0, path + offset)
            out[key] = out.get(key, 0.0) + abs(_michelson_amp(port, path, 0.0, long_fraction)) ** 2
    return out


def direct_branches() -> Branches:
    """No analyzers: every photon heads straight for its detector."""
    return Branches({(True, True, 0, 0): 1.0}, {(True, 0): 1.0}, {(True, 0): 1.0})


def franson_branches(phi_s: float, phi_i: float, visibility: float = 1.0,
                     umi: UMIParams = UMIParams()) -> Branches:
    """Energy-time analysis with a common UMI and a CW pump.

    Both-short and both-long amplitudes land at the same relative delay and,
    with a CW pump, at indistinguishable absolute times; they share a key.
    """
    kappa = umi.long_fraction
    terms = []
    for os_ in (0, 1):
        for oi in (0, 1):
            for xs in (0, 1):
                for xi in (0, 1):
                    amp = _michelson_amp(os_, xs, phi_s, kappa) * _michelson_amp(oi, xi, phi_i, kappa)
                    rel = xi - xs
                    slots = (0, 0) if rel == 0 else (xs, xi)
                    terms.append(((os_ == 0, oi == 0) + slots, amp))
    pair = qstate.coherent_branch_probabilities(terms, visibility)
    single = _single_michelson(kappa)
    return Branches(pair, single, dict(single), single, dict(single), umi.delay)


def time_bin_branches(phi_p: float, phi_s: float, phi_i: float, visibility: float = 1.0,
                      umi_s: UMIParams = UMIParams(), umi_i: UMIParams | None = None,
                      pump_long_fraction: float = 0.5) -> Branches:
    """Pump UMI plus one UMI per photon; slots are absolute (0, 1, 2).

    The pair amplitude in the late pump slot carries -exp(2i phi_p), so the
    central-slot coincidence follows 1 - V cos(2 phi_p - phi_s - phi_i).
    """
    umi_i = umi_s if umi_i is None else umi_i
    ks, ki = umi_s.long_fraction, umi_i.long_fraction
    w_s, w_l = (1 - pump_long_fraction) ** 2, pump_long_fraction**2
    norm = math.sqrt(w_s * w_s + w_l * w_l)
    pump_amp = {0: w_s / norm, 1: -np.exp(2j * phi_p) * w_l / norm}
    terms = []
    for y in (0, 1):
        for os_ in (0, 1):
            for oi in (0, 1):
                for xs in (0, 1):
                    for xi in (0, 1):
                        amp = (pump_amp[y] * _michelson_amp(os_, xs, phi_s, ks)
                               * _michelson_amp(oi, xi, phi_i, ki))
                        terms.append(((os_ == 0, oi == 0, y + xs, y + xi), amp))
    pair = qstate.coherent_branch_probabilities(terms, visibility)
    sig, idl = _marginals(pair)
    # Raman photons follow the pump intensity into either slot
    pump_w = {0: 1 - pump_long_fraction, 1: pump_long_fraction}
    noise = []
    for k in (ks, ki):
        table: dict = {}
        for y, wy in pump_w.items():
            for key, p in _single_michelson(k, y).items():
                table[key] = table.get(key, 0.0) + wy * p
        noise.append(table)
    return Branches(pair, sig, idl, noise[0], noise[1], umi_s.delay)


def analyzer_branches(rho, ket_s, ket_i) -> Branches:
    """Projective analyzers passing ket_s, ket_i; the orthogonal states are blocked."""
    rho = qstate.as_density(rho)

    def pair_of(k):
        k = np.asarray(k, dtype=complex)
        return {True: k, False: np.array([-np.conj(k[1]), np.conj(k[0])])}

    a, b = pair_of(ket_s), pair_of(ket_i)
    pair = {}
    for rs in (True, False):
        for ri in (True, False):
            proj = qstate.product_projector(a[rs], b[ri])
            pair[(rs, ri, 0, 0)] = qstate.born_probability(rho, proj)
    sig, idl = _marginals(pair)
    unpolarized = {(True, 0): 0.5, (False, 0): 0.5}
    return Branches(pair, sig, idl, unpolarized, dict(unpolarized), 0.0)


def polarizer_branches(rho, theta_s: float, theta_i: float) -> Branches:
    """Linear polarizers at theta_s, theta_i (radians) in front of each detector."""
    return analyzer_branches(rho, qstate.polarizer_ket(theta_s), qstate.polarizer_ket(theta_i))


def noisy_pair_state(s: SagnacParams, werner_weight: float = 1.0) -> qstate.DensityMatrix:
    """Sagnac output mixed with white noise: w rho + (1 - w) I/4."""
    if not 0.0 <= werner_weight <= 1.0:
        raise ValueError("werner_weight must lie in [0, 1]")
    rho = sagnac_output_state(s).matrix
    return qstate.DensityMatrix(werner_weight * rho + (1 - werner_weight) * np.eye(4) / 4)
