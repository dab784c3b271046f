"""CHSH S from polarizer-angle coincidence counts.

Settings are the eight analyzer angles (degrees): signal a, a', each with its
orthogonal partner, and idler b, b', likewise. The sign pattern that combines
the four correlators is fixed once from the ideal target state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from .. import qstate

ANGLES_S = (-22.5, 67.5, 22.5, 112.5)  # a, a_perp, a', a'_perp
ANGLES_I = (-45.0, 45.0, 0.0, 90.0)  # b, b_perp, b', b'_perp
PAIRS = (((0, 1), (0, 1)), ((0, 1), (2, 3)), ((2, 3), (0, 1)), ((2, 3), (2, 3)))


def setting_angles() -> list[tuple[float, float]]:
    """All 16 (theta_s, theta_i) combinations."""
    return [(a, b) for a in ANGLES_S for b in ANGLES_I]


def setting_label(theta_s: float, theta_i: float) -> str:
    return f"{theta_s:g},{theta_i:g}"


@dataclass(frozen=True)
class ChshResult:
    E: tuple[float, ...]
    E_err: tuple[float, ...]
    S: float
    S_err: float
    signs: tuple[int, ...]

    @property
    def violation_sigma(self) -> float:
        return (abs(self.S) - 2.0) / self.S_err if self.S_err > 0 else math.inf


def _correlator(n, ia, ib):
    (a, ap), (b, bp) = ia, ib
    same = n[(ANGLES_S[a], ANGLES_I[b])] + n[(ANGLES_S[ap], ANGLES_I[bp])]
    diff = n[(ANGLES_S[a], ANGLES_I[bp])] + n[(ANGLES_S[ap], ANGLES_I[b])]
    tot = same + diff
    if tot <= 0:
        raise ValueError("a correlator has no counts")
    E = (same - diff) / tot
    err = 2 * math.sqrt(same * diff / tot**3)
    return E, err


def ideal_signs(target=None) -> tuple[int, ...]:
    """Signs maximizing |S| for the target state (default |Phi+>)."""
    rho = qstate.as_density(target if target is not None else qstate.bell_state("phi_plus"))
    n = {(a, b): qstate.born_probability(rho, qstate.polarizer_projector(math.radians(a), math.radians(b)))
         for a, b in setting_angles()}
    return tuple(1 if _correlator(n, ia, ib)[0] >= 0 else -1 for ia, ib in PAIRS)


@lru_cache(maxsize=1)
def _phi_plus_signs() -> tuple[int, ...]:
    return ideal_signs()


def _normalize(counts) -> dict:
    if hasattr(counts, "rows"):
        counts = {r.label: r.coincidences for r in counts.rows}
    out = {}
    for k, v in counts.items():
        if isinstance(k, str):
            a, b = (float(t) for t in k.split(","))
        else:
            a, b = float(k[0]), float(k[1])
        out[(a, b)] = float(v)
    missing = [s for s in setting_angles() if s not in out]
    if missing:
        raise ValueError(f"missing CHSH settings: {missing}")
    return out


def chsh(counts: Mapping | object, signs: tuple[int, ...] | None = None) -> ChshResult:
    """S from counts (or Born probabilities) keyed by (theta_s, theta_i) or 'ts,ti' labels.

    Also accepts a CountsRecord whose row labels follow ``setting_label``.
    """
    n = _normalize(counts)
    signs = _phi_plus_signs() if signs is None else tuple(signs)
    if len(signs) != 4 or any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be four entries of +-1")
    Es, errs = zip(*(_correlator(n, ia, ib) for ia, ib in PAIRS))
    S = float(np.dot(signs, Es))
    return ChshResult(tuple(Es), tuple(errs), S, float(np.sqrt(np.sum(np.square(errs)))), tuple(signs))


def chsh_probabilities(rho) -> dict:
    rho = qstate.as_density(rho)
    return {(a, b): qstate.born_probability(rho, qstate.polarizer_projector(math.radians(a), math.radians(b)))
            for a, b in setting_angles()}
