"""Power-dependence fits: singles (quadratic + linear + constant) and CAR(P)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, lsq_linear


@dataclass(frozen=True)
class SinglesFit:
    a: float  # quadratic (pairs)
    b: float  # linear (Raman)
    d: float  # constant (darks)
    errors: tuple[float, float, float]
    constrained: tuple[bool, bool, bool]  # coefficient held at the zero bound

    def __call__(self, P):
        P = np.asarray(P, dtype=float)
        return self.a * P**2 + self.b * P + self.d


def fit_singles_curve(powers, rates, dead_time: float = 0.0, errors=None) -> SinglesFit:
    """Non-negative least squares of aP^2 + bP + d on dead-time-corrected rates."""
    P = np.asarray(powers, dtype=float)
    r = np.asarray(rates, dtype=float)
    if P.shape != r.shape or P.size < 4:
        raise ValueError("need at least 4 (power, rate) points")
    if dead_time > 0:
        if np.any(r * dead_time >= 1):
            raise ValueError("observed rate at or above 1/dead_time")
        r = r / (1 - r * dead_time)
    w = np.ones_like(r) if errors is None else 1 / np.asarray(errors, dtype=float)
    X = np.column_stack([P**2, P, np.ones_like(P)])
    sol = lsq_linear(X * w[:, None], r * w, bounds=(0, np.inf), method="bvls", tol=1e-14)
    resid = (X @ sol.x - r) * w
    dof = max(P.size - 3, 1)
    s2 = float(resid @ resid) / dof if errors is None else 1.0
    try:
        cov = s2 * np.linalg.inv((X * w[:, None]).T @ (X * w[:, None]))
        err = tuple(float(e) for e in np.sqrt(np.clip(np.diag(cov), 0, None)))
    except np.linalg.LinAlgError:
        err = (np.nan,) * 3
    a, b, d = (float(v) for v in sol.x)
    return SinglesFit(a, b, d, err, tuple(bool(m != 0) for m in sol.active_mask))


def car_model(P, xi, raman, dark, transmission, tau):
    """Symmetric-arm CAR: 1 + xi T^2 P^2 / (tau (T xi P^2 + T raman P + dark)^2)."""
    P = np.asarray(P, dtype=float)
    S = transmission * (xi * P**2 + raman * P) + dark
    return 1 + xi * transmission**2 * P**2 / (tau * S**2)


@dataclass(frozen=True)
class CarFit:
    xi: float
    raman: float
    dark: float  # effective per-arm dark rate (geometric mean of the two arms)
    errors: tuple[float, float, float]
    transmission: float
    tau: float
    degenerate: bool  # data show no interior peak
    cost: float

    @property
    def dark_product(self) -> float:
        return self.dark**2

    @property
    def peak_power(self) -> float:
        """Power of the single CAR maximum: T xi P^2 = dark."""
        return float(np.sqrt(self.dark / (self.transmission * self.xi)))

    def __call__(self, P):
        return car_model(P, self.xi, self.raman, self.dark, self.transmission, self.tau)


def fit_car_curve(powers, cars, transmission: float, tau: float, errors=None) -> CarFit:
    """Least-squares fit of the CAR model in log-parameters.

    ``transmission`` is the geometric mean of the two arm transmissions; the
    fitted Raman and dark terms are then symmetric-arm effective values.
    """
    P = np.asarray(powers, dtype=float)
    c = np.asarray(cars, dtype=float)
    if P.shape != c.shape or P.size < 5:
        raise ValueError("need at least 5 (power, CAR) points")
    if np.any(c <= 1) or np.any(P <= 0):
        raise ValueError("CAR values must exceed 1 at positive powers")
    order = np.argsort(P)
    P, c = P[order], c[order]
    sig = np.full_like(c, np.nan) if errors is None else np.asarray(errors, dtype=float)[order]
    k = int(np.argmax(c))
    degenerate = k == 0 or k == c.size - 1

    def resid(q):
        m = car_model(P, *np.exp(q), transmission, tau)
        if errors is None:
            return np.log(m - 1) - np.log(c - 1)
        return (m - c) / sig

    # coarse log grid for a start, then refine
    gx = np.log(np.logspace(2, 9, 15))
    gr = np.log(np.logspace(2, 9, 15))
    gd = np.log(np.logspace(0, 6, 13))
    best, q0 = np.inf, None
    for a in gx:
        for b in gr:
            for d in gd:
                q = np.array([a, b, d])
                cost = float(np.sum(resid(q) ** 2))
                if cost < best:
                    best, q0 = cost, q
    sol = least_squares(resid, q0, method="lm", xtol=1e-14, ftol=1e-14, max_nfev=20000)
    xi, raman, dark = np.exp(sol.x)
    try:
        J = sol.jac
        cov = np.linalg.inv(J.T @ J)
        if errors is None:
            cov *= 2 * sol.cost / max(P.size - 3, 1)
        err = tuple(float(v) for v in np.exp(sol.x) * np.sqrt(np.clip(np.diag(cov), 0, None)))
    except np.linalg.LinAlgError:
        err = (np.nan,) * 3
    return CarFit(float(xi), float(raman), float(dark), err, transmission, tau, degenerate, float(sol.cost))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    error: float
    intercept: float


def fit_log_slope(x, y, y_err=None) -> SlopeFit:
    """Weighted straight line through (log x, log y)."""
    lx = np.log(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    ly = np.log(y)
    w = np.ones_like(ly) if y_err is None else y / np.asarray(y_err, dtype=float)
    X = np.column_stack([lx, np.ones_like(lx)])
    A = X * w[:, None]
    coef, *_ = np.linalg.lstsq(A, ly * w, rcond=None)
    cov = np.linalg.inv(A.T @ A)
    if y_err is None:
        r = (X @ coef - ly)
        cov *= float(r @ r) / max(lx.size - 2, 1)
    return SlopeFit(float(coef[0]), float(np.sqrt(cov[0, 0])), float(coef[1]))
