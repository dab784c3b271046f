"""Two-qubit state algebra.

Basis order is fixed everywhere as (00, 01, 10, 11). Polarization maps
H -> 0 and V -> 1; time bins map S (short) -> 0 and L (long) -> 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np

PHYSICAL_TOL = 1e-9
ALGEBRAIC_TOL = 1e-10
NORM_TOL = 1e-12

BELL_KINDS = ("phi_plus", "phi_minus", "psi_plus", "psi_minus")


class NonPhysicalStateError(ValueError):
    pass


def _frozen(a, shape) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    if arr.shape != shape:
        raise ValueError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Ket2Q:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes, (4,))
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"ket is not normalized (|psi|^2 = {norm2!r})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amplitudes) -> "Ket2Q":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("zero vector cannot be normalized")
        return cls(amps / norm)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class PhysicalityReport:
    ok: bool
    problems: tuple[str, ...] = ()
    min_eigenvalue: float = 0.0
    trace: complex = 1.0

    def __bool__(self) -> bool:
        return self.ok


def is_physical(m) -> PhysicalityReport:
    """Check hermiticity, unit trace and positivity of a 4x4 matrix.

    Never raises; every failed check is listed in ``problems``.
    """
    m = np.asarray(getattr(m, "matrix", m), dtype=complex)
    problems = []
    if m.shape != (4, 4):
        return PhysicalityReport(False, (f"shape {m.shape} is not (4, 4)",), float("nan"), complex("nan"))
    herm_err = float(np.max(np.abs(m - m.conj().T)))
    if herm_err > ALGEBRAIC_TOL:
        problems.append(f"not Hermitian (max |M - M^dag| = {herm_err:.3g})")
    tr = complex(np.trace(m))
    if abs(tr - 1.0) > ALGEBRAIC_TOL:
        problems.append(f"trace is {tr.real:.12g}{tr.imag:+.3g}j, not 1")
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (m + m.conj().T))))
    if min_eig < -PHYSICAL_TOL:
        problems.append(f"negative eigenvalue {min_eig:.3g}")
    return PhysicalityReport(not problems, tuple(problems), min_eig, tr)


@dataclass(frozen=True, eq=False)
class RawMatrix:
    """A 4x4 estimate with no positivity guarantee (linear tomography output)."""

    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix, (4, 4)))

    def check(self) -> PhysicalityReport:
        return is_physical(self.matrix)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix, (4, 4))
        report = is_physical(m)
        if not report:
            raise NonPhysicalStateError("; ".join(report.problems))
        object.__setattr__(self, "matrix", m)

    def to_pairs(self) -> list[list[float]]:
        """16 ``[re, im]`` pairs in row-major order."""
        return [[float(z.real), float(z.imag)] for z in self.matrix.ravel()]

    @classmethod
    def from_pairs(cls, pairs) -> "DensityMatrix":
        arr = np.asarray(pairs, dtype=float)
        if arr.shape != (16, 2):
            raise ValueError(f"expected 16 (re, im) pairs, got shape {arr.shape}")
        return cls((arr[:, 0] + 1j * arr[:, 1]).reshape(4, 4))

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


@dataclass(frozen=True, eq=False)
class Projector:
    matrix: np.ndarray
    label: str = field(default="")

    def __post_init__(self):
        m = _frozen(self.matrix, (4, 4))
        if np.max(np.abs(m - m.conj().T)) > ALGEBRAIC_TOL:
            raise ValueError("projector is not Hermitian")
        if np.max(np.abs(m @ m - m)) > ALGEBRAIC_TOL:
            raise ValueError("projector is not idempotent")
        object.__setattr__(self, "matrix", m)


def as_density(rho) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    if isinstance(rho, Ket2Q):
        return rho.density()
    return DensityMatrix(np.asarray(getattr(rho, "matrix", rho)))


# --- states -----------------------------------------------------------------

def bell_state(kind: str = "phi_plus", extra_phase: float = 0.0) -> Ket2Q:
    """(|00> +- e^{i phase}|11>)/sqrt2 or (|01> +- e^{i phase}|10>)/sqrt2."""
    if kind not in BELL_KINDS:
        raise ValueError(f"unknown Bell state {kind!r}; expected one of {BELL_KINDS}")
    sign = -1.0 if kind.endswith("minus") else 1.0
    amps = np.zeros(4, dtype=complex)
    first, second = (0, 3) if kind.startswith("phi") else (1, 2)
    amps[first] = 1 / np.sqrt(2)
    amps[second] = sign * np.exp(1j * extra_phase) / np.sqrt(2)
    return Ket2Q(amps)


def general_pair_state(eta: float, delta: float) -> DensityMatrix:
    """Pure state (|HH> + eta e^{i delta}|VV>)/sqrt(1 + eta^2)."""
    if not np.isfinite(eta):
        raise ValueError("eta must be finite")
    amps = np.array([1.0, 0.0, 0.0, eta * np.exp(1j * delta)], dtype=complex)
    return Ket2Q(amps / np.sqrt(1.0 + eta * eta)).density()


def maximally_mixed() -> DensityMatrix:
    return DensityMatrix(np.eye(4) / 4)


def werner_state(p: float, kind: str = "phi_plus") -> DensityMatrix:
    if not 0.0 <= p <= 1.0:
        raise ValueError("Werner weight must lie in [0, 1]")
    bell = bell_state(kind).density().matrix
    return DensityMatrix(p * bell + (1 - p) * np.eye(4) / 4)


_QUBIT_KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "A": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "R": np.array([1, -1j], dtype=complex) / np.sqrt(2),
    "L": np.array([1, 1j], dtype=complex) / np.sqrt(2),
}


def qubit_ket(label: str) -> np.ndarray:
    return _QUBIT_KETS[label].copy()


def polarizer_ket(theta: float) -> np.ndarray:
    """Linear polarization at angle theta (radians) from H."""
    return np.array([np.cos(theta), np.sin(theta)], dtype=complex)


def product_projector(a: np.ndarray, b: np.ndarray, label: str = "") -> Projector:
    psi = np.kron(a, b)
    return Projector(np.outer(psi, psi.conj()), label)


def polarizer_projector(theta_s: float, theta_i: float) -> Projector:
    """Coincidence projector for polarizers at theta_s, theta_i (radians)."""
    return product_projector(polarizer_ket(theta_s), polarizer_ket(theta_i),
                             f"pol({np.degrees(theta_s):g},{np.degrees(theta_i):g})")


# --- measurement ----------------------------------------------------------------

def born_probability(rho, proj) -> float:
    rho = as_density(rho)
    p = np.real(np.trace(rho.matrix @ np.asarray(getattr(proj, "matrix", proj))))
    if p < -PHYSICAL_TOL or p > 1 + PHYSICAL_TOL:
        raise ValueError(f"Born probability {p} outside [0, 1]; projector invalid?")
    return float(min(max(p, 0.0), 1.0))


RANK_TOL = 1e-13  # eigenvalues below this fraction of the largest are rounding noise


def _clamped_eigh(m: np.ndarray):
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.where(w < RANK_TOL * max(w.max(), 0.0), 0.0, w)
    return w, v


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    """Square root of a Hermitian PSD matrix via eigendecomposition.

    Eigenvalues that are rounding noise are set to zero first; their square
    roots would otherwise leak ~1e-8 into anything built on a rank-deficient
    state.
    """
    m = np.asarray(m, dtype=complex)
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if w.min() < -PHYSICAL_TOL:
        raise NonPhysicalStateError(f"matrix square root of non-PSD input (min eigenvalue {w.min():.3g})")
    w, v = _clamped_eigh(m)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho_exp, rho_th) -> float:
    """Uhlmann fidelity [Tr sqrt(sqrt(th) exp sqrt(th))]^2."""
    a = as_density(rho_exp).matrix
    s = sqrtm_psd(as_density(rho_th).matrix)
    inner = s @ a @ s
    w, _ = _clamped_eigh(inner)
    f = float(np.sum(np.sqrt(w)) ** 2)
    return min(max(f, 0.0), 1.0)


def pure_state_fidelity(rho, ket: Ket2Q) -> float:
    psi = ket.amplitudes
    return float(np.real(psi.conj() @ as_density(rho).matrix @ psi))


def purity(rho) -> float:
    return as_density(rho).purity


def coherent_branch_probabilities(
    terms: Iterable[tuple[Hashable, complex]], visibility: float = 1.0
) -> dict[Hashable, float]:
    """Probabilities of distinguishable outcomes from path amplitudes.

    Amplitudes sharing a key are indistinguishable and add coherently with
    weight ``visibility``; the remainder adds incoherently.
    """
    if not 0.0 <= visibility <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    coherent: dict = {}
    incoherent: dict = {}
    for key, amp in terms:
        coherent[key] = coherent.get(key, 0.0) + amp
        incoherent[key] = incoherent.get(key, 0.0) + abs(amp) ** 2
    return {
        k: float(visibility * abs(coherent[k]) ** 2 + (1 - visibility) * incoherent[k])
        for k in coherent
    }


def marginal(probs: Mapping[tuple, float], index: int) -> dict:
    out: dict = {}
    for key, p in probs.items():
        out[key[index]] = out.get(key[index], 0.0) + p
    return out
