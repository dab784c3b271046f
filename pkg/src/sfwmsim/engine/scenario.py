"""Scenario records: everything one simulated acquisition depends on."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, replace

from .. import photonics as ph
from .. import qstate
from ..channels import N_PAIRS

SCHEMES = ("energy_time", "time_bin", "polarization")


class ScenarioError(ValueError):
    """Inconsistent or incomplete scenario blocks."""


@dataclass(frozen=True)
class Setting:
    """Analyzer settings. Phases in radians, polarizer angles in degrees."""

    phi_s: float = 0.0
    phi_i: float = 0.0
    phi_p: float = 0.0
    theta_s: float = 0.0
    theta_i: float = 0.0
    analyzers: bool = True
    phase_randomized: bool = False
    basis: str = ""  # polarization only: two of H/V/D/A/R/L, overrides the angles
    label: str = ""

    def __post_init__(self):
        if self.basis and (len(self.basis) != 2 or any(c not in "HVDARL" for c in self.basis)):
            raise ScenarioError(f"basis must be two of H/V/D/A/R/L, got {self.basis!r}")


@dataclass(frozen=True)
class Scenario:
    scheme: str
    source: ph.SourceParams
    detector_s: ph.DetectorParams
    detector_i: ph.DetectorParams
    arm_s: ph.ArmLossBudget
    arm_i: ph.ArmLossBudget
    pump: ph.PumpParams
    umis: tuple[ph.UMIParams, ...] = ()
    sagnac: ph.SagnacParams | None = None
    intrinsic_visibility: float = 1.0
    channel_pair: int = 8
    setting: Setting = field(default_factory=Setting)
    duration: float = 1.0
    seed: int = 0
    slot: float = 100e-12
    block_duration: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "umis", tuple(self.umis))
        if self.scheme not in SCHEMES:
            raise ScenarioError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if not self.duration > 0:
            raise ScenarioError("duration must be positive")
        if not 1 <= self.channel_pair <= N_PAIRS:
            raise ScenarioError(f"channel pair must be in 1..{N_PAIRS}")
        if not 0.0 <= self.intrinsic_visibility <= 1.0:
            raise ScenarioError("intrinsic visibility must lie in [0, 1]")
        if self.slot <= 0 or self.block_duration <= 0 or self.seed < 0:
            raise ScenarioError("slot and block duration must be positive, seed non-negative")
        for arm, det in (("signal", self.detector_s), ("idler", self.detector_i)):
            budget = self.arm_s if arm == "signal" else self.arm_i
            if abs(budget.detector_efficiency - det.efficiency) > 1e-12:
                raise ScenarioError(f"{arm} arm budget and detector disagree on efficiency")
            if det.gated and not self.pump.pulsed:
                raise ScenarioError(f"gated {arm} detector needs a pulsed pump")
        if self.scheme == "energy_time":
            if len(self.umis) != 1:
                raise ScenarioError("energy-time scheme needs exactly one UMI")
            if self.pump.pulsed:
                raise ScenarioError("energy-time scheme is CW-pumped")
        elif self.scheme == "time_bin":
            if len(self.umis) != 3:
                raise ScenarioError("time-bin scheme needs three UMIs (pump, signal, idler)")
            if not self.pump.pulsed:
                raise ScenarioError("time-bin scheme needs a pulsed pump")
            if len({round(u.delay * 1e15) for u in self.umis}) != 1:
                raise ScenarioError("time-bin UMIs must share one delay")
        elif self.sagnac is None:
            raise ScenarioError("polarization scheme needs a Sagnac block")
        if self.pump.pulsed:
            period_ps = 1e12 / self.pump.rep_rate
            if abs(period_ps - round(period_ps)) > 1e-6:
                raise ScenarioError("pulse period must be a whole number of picoseconds")

    # -- derived quantities --

    @property
    def transmission_s(self) -> float:
        return self.arm_s.transmission

    @property
    def transmission_i(self) -> float:
        return self.arm_i.transmission

    def pair_rate(self) -> float:
        """Pairs per second at the chip."""
        P = self.pump.power_mw
        xi = self.source.pulsed_xi if self.pump.pulsed else self.source.xi
        return xi * P * P

    def noise_rate(self, arm: str) -> float:
        """Raman photons per second at the detector (after arm losses)."""
        P = self.pump.power_mw
        t = self.transmission_s if arm == "s" else self.transmission_i
        factor = self.source.pulsed_raman_factor if self.pump.pulsed else 1.0
        return t * factor * self.source.raman(arm, self.channel_pair) * P

    def branches(self) -> ph.Branches:
        st = self.setting
        if not st.analyzers:
            return ph.direct_branches()
        vis = 0.0 if st.phase_randomized else self.intrinsic_visibility
        if self.scheme == "energy_time":
            return ph.franson_branches(st.phi_s, st.phi_i, vis, self.umis[0])
        if self.scheme == "time_bin":
            return ph.time_bin_branches(st.phi_p, st.phi_s, st.phi_i, vis, self.umis[1], self.umis[2],
                                        self.umis[0].long_fraction)
        rho = ph.noisy_pair_state(self.sagnac, self.intrinsic_visibility)
        if st.basis:
            return ph.analyzer_branches(rho, qstate.qubit_ket(st.basis[0]), qstate.qubit_ket(st.basis[1]))
        return ph.polarizer_branches(rho, math.radians(st.theta_s), math.radians(st.theta_i))

    # -- variants --

    def with_setting(self, **kw) -> "Scenario":
        return replace(self, setting=replace(self.setting, **kw))

    def with_power(self, power_mw: float) -> "Scenario":
        return replace(self, pump=self.pump.with_power(power_mw))

    # -- identity --

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """SHA-256 over every field, seed included."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=repr, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()
