"""Two-qubit state tomography: linear inversion and maximum likelihood.

The default measurement set is the 16 product projectors of the standard
H/V/D/R scheme. The MLE parameterizes rho = T^dag T / Tr(T^dag T) with T
lower triangular (4 real diagonal + 6 complex off-diagonal entries) and
minimizes the Poisson negative log-likelihood with BFGS and an analytic
gradient.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .. import qstate

JAMES_SETTINGS = ("HH", "HV", "VV", "VH", "RH", "RV", "DV", "DH",
                  "DR", "DD", "RD", "HD", "VD", "VL", "HL", "RL")

_PAULI = [np.eye(2, dtype=complex), np.array([[0, 1], [1, 0]], dtype=complex),
          np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]], dtype=complex)]
_BASIS = [np.kron(a, b) for a in _PAULI for b in _PAULI]
_TRIL = np.tril_indices(4, -1)


def setting_projector(label: str) -> qstate.Projector:
    if len(label) != 2:
        raise ValueError(f"setting label must be two letters, got {label!r}")
    return qstate.product_projector(qstate.qubit_ket(label[0]), qstate.qubit_ket(label[1]), label)


def projectors(labels: Sequence[str] = JAMES_SETTINGS) -> np.ndarray:
    return np.array([setting_projector(s).matrix for s in labels])


def ideal_counts(rho, n_per_setting: float, labels: Sequence[str] = JAMES_SETTINGS) -> dict[str, float]:
    """Expected counts: n * Tr(P rho) per setting (n = pairs sent per setting)."""
    rho = qstate.as_density(rho)
    return {s: n_per_setting * qstate.born_probability(rho, setting_projector(s)) for s in labels}


def sample_counts(rho, n_per_setting: float, rng, labels: Sequence[str] = JAMES_SETTINGS) -> dict[str, int]:
    mean = ideal_counts(rho, n_per_setting, labels)
    return {s: int(rng.poisson(m)) for s, m in mean.items()}


def _unpack(counts) -> tuple[list[str], np.ndarray]:
    if hasattr(counts, "rows"):
        counts = {r.label: r.coincidences for r in counts.rows}
    labels = list(counts)
    n = np.array([counts[s] for s in labels], dtype=float)
    if np.any(n < 0):
        raise ValueError("counts must be non-negative")
    if n.sum() <= 0:
        raise ValueError("no counts")
    return labels, n


def _design(labels) -> tuple[np.ndarray, np.ndarray]:
    P = projectors(labels)
    M = np.real(np.einsum("kab,mba->km", P, np.array(_BASIS))) / 4.0
    return P, M


def linear_tomography(counts: Mapping[str, float]) -> qstate.RawMatrix:
    """Linear inversion; the result is Hermitian with unit trace but may not be positive."""
    labels, n = _unpack(counts)
    _, M = _design(labels)
    if np.linalg.matrix_rank(M, tol=1e-10) < 16:
        raise np.linalg.LinAlgError("measurement set is not informationally complete")
    r, *_ = np.linalg.lstsq(M, n, rcond=None)
    if r[0] <= 0:
        raise ValueError("inverted state has non-positive trace")
    rho = sum(c * B for c, B in zip(r / r[0], _BASIS)) / 4.0
    return qstate.RawMatrix(0.5 * (rho + rho.conj().T))


def t_from_params(t: np.ndarray) -> np.ndarray:
    T = np.diag(t[:4]).astype(complex)
    T[_TRIL] = t[4:10] + 1j * t[10:16]
    return T


def params_from_t(T: np.ndarray) -> np.ndarray:
    return np.concatenate([np.real(np.diag(T)), T[_TRIL].real, T[_TRIL].imag])


def rho_from_params(t: np.ndarray) -> np.ndarray:
    T = t_from_params(t)
    m = T.conj().T @ T
    return m / np.real(np.trace(m))


def params_from_rho(rho: np.ndarray, scale: float = 1.0, floor: float = 1e-3) -> np.ndarray:
    """Lower-triangular T with T^dag T = scale * rho (rho mixed with I/4 by ``floor``)."""
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w = np.clip(w, 0.0, None)
    m = (v * w) @ v.conj().T
    m = (1 - floor) * m / np.real(np.trace(m)) + floor * np.eye(4) / 4
    J = np.eye(4)[::-1]
    L = np.linalg.cholesky(J @ (scale * m) @ J)
    return params_from_t(J @ L.conj().T @ J)


def neg_log_likelihood(t: np.ndarray, P: np.ndarray, n: np.ndarray) -> float:
    """Poisson NLL with unnormalized means Tr(P T^dag T).

    Written as sum(lam - n - n log(lam / n)), which is zero for a perfect fit;
    dropping the data-only constant keeps values small near the optimum.
    """
    T = t_from_params(t)
    lam = np.real(np.einsum("kab,ba->k", P, T.conj().T @ T))
    lam = np.maximum(lam, 1e-300)
    pos = n > 0
    return float(np.sum(lam - n) - np.sum(n[pos] * np.log(lam[pos] / n[pos])))


def nll_gradient(t: np.ndarray, P: np.ndarray, n: np.ndarray) -> np.ndarray:
    T = t_from_params(t)
    lam = np.maximum(np.real(np.einsum("kab,ba->k", P, T.conj().T @ T)), 1e-300)
    G = np.einsum("k,kab->ab", 1.0 - n / lam, P)
    TG = 2.0 * (T @ G)
    return np.concatenate([np.real(np.diag(TG)), TG[_TRIL].real, TG[_TRIL].imag])


@dataclass(frozen=True, eq=False)
class MleResult:
    rho: qstate.DensityMatrix
    converged: bool
    grad_norm: float
    n_iter: int
    nll: float
    scale: float  # fitted number of pairs behind a unit-probability setting
    message: str = ""


def mle_tomography(counts: Mapping[str, float], gtol: float = 1e-8, maxiter: int = 10_000) -> MleResult:
    """Maximum-likelihood state; always physical.

    Counts are normalized by their total before fitting so the gradient
    tolerance does not depend on the statistics.
    """
    labels, n = _unpack(counts)
    P, M = _design(labels)
    total = n.sum()
    nn = n / total
    try:
        rho0 = linear_tomography(dict(zip(labels, n))).matrix
    except ValueError:
        rho0 = np.eye(4) / 4
    probs0 = np.real(np.einsum("kab,ba->k", P, rho0))
    scale0 = nn.sum() / max(probs0.sum(), 1e-12)
    t0 = params_from_rho(rho0, scale0)
    res = minimize(neg_log_likelihood, t0, args=(P, nn), jac=nll_gradient, method="BFGS",
                   options={"gtol": gtol, "maxiter": maxiter})
    g = float(np.max(np.abs(nll_gradient(res.x, P, nn))))
    nit = int(res.nit)
    for _ in range(5):  # restarts reset a stale inverse-Hessian estimate
        if g < gtol or nit >= maxiter:
            break
        res = minimize(neg_log_likelihood, res.x, args=(P, nn), jac=nll_gradient, method="BFGS",
                       options={"gtol": gtol, "maxiter": maxiter - nit})
        nit += int(res.nit)
        g = float(np.max(np.abs(nll_gradient(res.x, P, nn))))
    rho = rho_from_params(res.x)
    rho = 0.5 * (rho + rho.conj().T)
    T = t_from_params(res.x)
    scale = float(np.real(np.trace(T.conj().T @ T))) * total
    converged = bool(g < gtol)
    return MleResult(qstate.DensityMatrix(rho), converged, g, nit, float(res.fun), scale,
                     str(res.message))


@dataclass(frozen=True)
class FidelityEstimate:
    value: float  # fidelity of the point estimate
    error: float  # bootstrap standard deviation
    bootstrap_mean: float
    resamples: int


def fidelity_with_error(counts: Mapping[str, float], target, resamples: int = 100,
                        seed: int = 0) -> FidelityEstimate:
    """Parametric bootstrap: Poisson resamples around the MLE-predicted counts."""
    if resamples < 100:
        raise ValueError("need at least 100 bootstrap resamples")
    labels, n = _unpack(counts)
    fit = mle_tomography(dict(zip(labels, n)))
    F0 = qstate.fidelity(fit.rho, target)
    P = projectors(labels)
    mean = fit.scale * np.real(np.einsum("kab,ba->k", P, fit.rho.matrix))
    children = np.random.SeedSequence(seed).spawn(resamples)
    vals = np.empty(resamples)
    for k, ss in enumerate(children):
        rng = np.random.Generator(np.random.Philox(ss))
        draw = rng.poisson(mean)
        if draw.sum() == 0:
            draw = mean
        vals[k] = qstate.fidelity(mle_tomography(dict(zip(labels, draw))).rho, target)
    return FidelityEstimate(F0, float(vals.std(ddof=1)), float(vals.mean()), resamples)
