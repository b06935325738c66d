"""Closed-form band-structure kernels of the two-band k.p dispersion.

Both bands share the kinetic term p^2/2m and split by the gap function
R(p) = sqrt((alpha.p)^2 + gamma^2); all kernels below are elementary
functions of p and vectorize over any leading axes of the momentum array.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Band(Enum):
    """Band label: UPPER rides +R(p), LOWER rides -R(p)."""

    UPPER = +1
    LOWER = -1

    @property
    def sign(self) -> float:
        return float(self.value)


@dataclass(frozen=True, eq=False)
class MaterialParams:
    """Crystal and thermodynamic constants in scaled units.

    alpha : interband coupling velocity, a 3-vector; the zero vector gives
            parabolic bands and every routine must support it.
    gamma : half band-gap, > 0.
    mass  : bare carrier mass, > 0 (default 1, thermal scaling).
    beta  : inverse thermal energy, > 0 (default 1).
    """

    alpha: np.ndarray
    gamma: float
    mass: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float)
        if alpha.shape != (3,):
            raise ValueError("alpha must be a 3-vector")
        object.__setattr__(self, "alpha", alpha)
        if not self.gamma > 0.0:
            raise ValueError("gamma must be > 0")
        if not self.mass > 0.0:
            raise ValueError("mass must be > 0")
        if not self.beta > 0.0:
            raise ValueError("beta must be > 0")

    @property
    def alpha_norm(self) -> float:
        return float(np.linalg.norm(self.alpha))


def _gap(params: MaterialParams, p: np.ndarray) -> np.ndarray:
    """R(p) = sqrt((alpha.p)^2 + gamma^2); >= gamma > 0 everywhere."""
    ap = np.asarray(p, dtype=float) @ params.alpha
    return np.sqrt(ap * ap + params.gamma**2)


def energy(params: MaterialParams, band: Band, p: np.ndarray) -> np.ndarray:
    """Band energy p^2/2m +/- R(p). Total function, even in p."""
    p = np.asarray(p, dtype=float)
    kinetic = (p * p).sum(axis=-1) / (2.0 * params.mass)
    return kinetic + band.sign * _gap(params, p)


def nu(params: MaterialParams, p: np.ndarray) -> np.ndarray:
    """Unit pseudo-spin direction (0, alpha.p, gamma)/R(p)."""
    p = np.asarray(p, dtype=float)
    ap = p @ params.alpha
    r = np.sqrt(ap * ap + params.gamma**2)
    out = np.zeros(p.shape[:-1] + (3,))
    out[..., 1] = ap / r
    out[..., 2] = params.gamma / r
    return out


def velocity(params: MaterialParams, band: Band, p: np.ndarray) -> np.ndarray:
    """Group velocity p/m +/- nu2(p) alpha; odd in p, within |alpha| of p/m."""
    p = np.asarray(p, dtype=float)
    ap = p @ params.alpha
    nu2 = ap / np.sqrt(ap * ap + params.gamma**2)
    return p / params.mass + band.sign * nu2[..., None] * params.alpha


def inverse_mass(params: MaterialParams, band: Band, p: np.ndarray) -> np.ndarray:
    """Inverse effective-mass tensor I/m +/- gamma^2 alpha x alpha / R(p)^3.

    Equals the p-Hessian of the band energy.  The lower-band tensor loses
    positive definiteness where m |alpha|^2 gamma^2 >= R(p)^3.
    """
    p = np.asarray(p, dtype=float)
    ap = p @ params.alpha
    r3 = (ap * ap + params.gamma**2) ** 1.5
    aa = np.outer(params.alpha, params.alpha)
    base = np.eye(3) / params.mass
    corr = (params.gamma**2 / r3)[..., None, None] * aa
    return np.broadcast_to(base, corr.shape).copy() + band.sign * corr
