"""Fringe fitting: A (1 + V cos(w phi - phi0)) with raw and net visibility."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class FringeFit:
    amplitude: float
    amplitude_err: float
    visibility_raw: float
    visibility_raw_err: float
    visibility_net: float
    visibility_net_err: float
    phase: float
    phase_err: float
    frequency: float
    frequency_err: float
    accidental: float
    converged: bool
    residuals: np.ndarray

    @property
    def period(self) -> float:
        return 2 * np.pi / self.frequency

    def bell_violation(self, threshold: float = 1 / np.sqrt(2)) -> bool:
        return self.visibility_net > threshold


def _model(x, phi):
    A, V, p0, w = x
    return A * (1 + V * np.cos(w * phi - p0))


def _linear_start(phi, y, wts, w):
    X = np.column_stack([np.ones_like(phi), np.cos(w * phi), np.sin(w * phi)])
    coef, *_ = np.linalg.lstsq(X * wts[:, None], y * wts, rcond=None)
    c0, c1, c2 = coef
    resid = float(np.sum(((X @ coef - y) * wts) ** 2))
    A = max(c0, 1e-12 * max(abs(c1), abs(c2), 1.0))
    return np.array([A, np.hypot(c1, c2) / A, np.arctan2(c2, c1), w]), resid


def fit_fringe(phases, counts, accidental: float = 0.0, accidental_err: float = 0.0,
               frequency: float = 1.0, free_frequency: bool = False) -> FringeFit:
    """Poisson-weighted least squares.

    ``accidental`` is the per-point background measured in an offset delay
    window; the net visibility is the contrast after subtracting it. With
    ``free_frequency`` the fringe frequency (cycles per 2 pi of the scanned
    phase) is a fit parameter, started from a scan around ``frequency``.
    """
    phi = np.asarray(phases, dtype=float)
    y = np.asarray(counts, dtype=float)
    if phi.shape != y.shape or phi.ndim != 1:
        raise ValueError("phases and counts must be matching 1-D arrays")
    if phi.size < 5:
        raise ValueError("need at least 5 points")
    if np.ptp(phi) * frequency <= np.pi:
        raise ValueError("points must span more than half a period")
    if np.any(y < 0) or not np.any(y > 0):
        raise ValueError("counts must be non-negative and not all zero")
    scale = y.mean()
    var = np.maximum(y, 1.0)
    wts = 1 / np.sqrt(var)
    wn = wts / wts.mean()  # scale-free weights for the optimizer
    yn = y / scale

    if free_frequency:
        grid = frequency * np.linspace(0.7, 1.3, 121)
        x0 = min((_linear_start(phi, yn, wn, w) for w in grid), key=lambda t: t[1])[0]
    else:
        x0 = _linear_start(phi, yn, wn, frequency)[0]
    free = [0, 1, 2, 3] if free_frequency else [0, 1, 2]

    def resid(p):
        x = x0.copy()
        x[free] = p
        return (_model(x, phi) - yn) * wn

    sol = least_squares(resid, x0[free], method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    x = x0.copy()
    x[free] = sol.x
    x[0] *= scale
    if x[1] < 0:
        x[1] = -x[1]
        x[2] += np.pi
    x[2] = (x[2] + np.pi) % (2 * np.pi) - np.pi

    # covariance from the Jacobian at the optimum with true Poisson sigmas
    eps = 1e-7
    J = np.empty((phi.size, len(free)))
    for k, idx in enumerate(free):
        h = eps * max(abs(x[idx]), 1.0)
        xp, xm = x.copy(), x.copy()
        xp[idx] += h
        xm[idx] -= h
        J[:, k] = (_model(xp, phi) - _model(xm, phi)) / (2 * h) * wts
    try:
        cov = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = np.full((len(free), len(free)), np.nan)
    err = np.zeros(4)
    err[free] = np.sqrt(np.clip(np.diag(cov), 0, None))

    A, V = x[0], x[1]
    B = float(accidental)
    if A - B <= 0:
        raise FitError("accidental level exceeds the fringe mean")
    v_net = A * V / (A - B)
    # d v_net / d(A, V, B)
    g = np.array([-V * B / (A - B) ** 2, A / (A - B)])
    v_net_var = g @ cov[:2, :2] @ g + (A * V / (A - B) ** 2) ** 2 * accidental_err**2
    residuals = y - _model(x, phi)
    return FringeFit(A, err[0], V, err[1], v_net, float(np.sqrt(max(v_net_var, 0.0))), x[2], err[2],
                     x[3], err[3], B, bool(sol.success), residuals)
