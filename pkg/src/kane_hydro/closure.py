"""Inversion of the moment constraints: given (n, u) find the multiplier pair
(A, B) of the tilted equilibrium, and evaluate the closure tensors.

The density multiplier is eliminated analytically, A = log n - f(B), leaving
grad f(B) = u for the velocity multiplier alone.  f is smooth and strictly
convex (its Hessian is the velocity covariance), so a damped Newton iteration
with the exact Hessian converges from any start; the merit is |grad f - u|^2/2
and every Newton step is a descent direction for it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence
from .material import Band, MaterialParams
from .moments import NormalizedMoments, QuadratureSpec, raw_moments, raw_moments_batch


@dataclass(frozen=True, eq=False)
class Multipliers:
    """Lagrange pair of one band: a enforces the density, b the velocity."""

    a: float
    b: np.ndarray


@dataclass(frozen=True, eq=False)
class BandMoments:
    """Hydrodynamic state of one band at a point: density and mean velocity."""

    n: float
    u: np.ndarray

    def __post_init__(self):
        if not self.n > 0.0:
            raise ValueError("density must be > 0")


@dataclass(frozen=True, eq=False)
class ClosureTensors:
    """Pressure tensor, averaged inverse-mass tensor, and the thermal part
    t = Hess f (pressure = n u x u + n t)."""

    pressure: np.ndarray
    qmass: np.ndarray
    t: np.ndarray


@dataclass(frozen=True)
class SolverConfig:
    tol_u: float = 1e-10
    max_iter: int = 100
    ls_shrink: float = 0.5
    ls_max: int = 30
    armijo: float = 1e-4

    def __post_init__(self):
        if not self.tol_u > 0.0:
            raise ValueError("tol_u must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True, eq=False)
class BatchSolution:
    """Result of a batched multiplier solve; `raw` holds the moments at the
    final iterate so closure tensors come for free."""

    a: np.ndarray
    b: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray
    converged: np.ndarray
    raw: NormalizedMoments


def log_partition_f(params: MaterialParams, band: Band, B: np.ndarray,
                    spec: QuadratureSpec = QuadratureSpec()) -> float:
    """log of the B-tilted partition integral, computed with the analytic
    max-shift (the unshifted integrand is never exponentiated)."""
    return float(raw_moments(params, band, B, spec).log_m0)


def grad_f(params: MaterialParams, band: Band, B: np.ndarray,
           spec: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Mean velocity under the tilted weight; equals m1/m0 at A=0."""
    return raw_moments(params, band, B, spec).u


def hess_f(params: MaterialParams, band: Band, B: np.ndarray,
           spec: QuadratureSpec = QuadratureSpec()) -> np.ndarray:
    """Velocity covariance m2/m0 - u x u; symmetric positive definite."""
    raw = raw_moments(params, band, B, spec)
    return raw.m2n - np.outer(raw.u, raw.u)


def _hessians(raw: NormalizedMoments) -> np.ndarray:
    return raw.m2n - raw.u[:, :, None] * raw.u[:, None, :]


def _assert_spd(h: np.ndarray) -> None:
    # Cholesky is the positive-definiteness assertion; by convexity it can
    # only fail if the quadrature broke down.
    try:
        np.linalg.cholesky(h)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("closure Hessian lost positive definiteness") from exc


def solve_multipliers_batch(params: MaterialParams, band: Band,
                            n: np.ndarray, u: np.ndarray,
                            cfg: SolverConfig,
                            b0: np.ndarray | None = None,
                            spec: QuadratureSpec = QuadratureSpec()) -> BatchSolution:
    """Damped Newton over a batch of targets u with shape (C, 3).

    Never raises on non-convergence; the caller inspects `converged`.
    """
    n = np.asarray(n, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(n <= 0.0):
        raise ValueError("density must be > 0")
    C = u.shape[0]
    b = (params.mass * params.beta) * u.copy() if b0 is None else np.array(b0, dtype=float)

    raw = raw_moments_batch(params, band, b, spec)
    res = raw.u - u
    merit = 0.5 * (res * res).sum(axis=1)
    iters = np.zeros(C, dtype=int)
    rnorm = np.sqrt(2.0 * merit)

    for _ in range(cfg.max_iter):
        active = rnorm > cfg.tol_u
        if not active.any():
            break
        idx = np.flatnonzero(active)
        h = _hessians(raw)[idx]
        _assert_spd(h)
        step = np.linalg.solve(h, -res[idx][..., None])[..., 0]

        # Backtracking on the merit; the directional derivative along a Newton
        # step is -2*merit, so the Armijo slope is explicit.
        lam = np.ones(idx.size)
        pending = np.arange(idx.size)
        trial_b = b[idx].copy()
        trial_raw = None
        for _ls in range(cfg.ls_max):
            cand = b[idx[pending]] + lam[pending, None] * step[pending]
            craw = raw_moments_batch(params, band, cand, spec)
            cres = craw.u - u[idx[pending]]
            cmerit = 0.5 * (cres * cres).sum(axis=1)
            ok = cmerit <= merit[idx[pending]] * (1.0 - 2.0 * cfg.armijo * lam[pending])
            if trial_raw is None:
                trial_raw = NormalizedMoments(craw.log_m0.copy(), craw.u.copy(),
                                              craw.m2n.copy(), craw.qn.copy())
            sel = pending[ok]
            rel = np.flatnonzero(ok)
            trial_b[sel] = cand[rel]
            trial_raw.log_m0[sel] = craw.log_m0[rel]
            trial_raw.u[sel] = craw.u[rel]
            trial_raw.m2n[sel] = craw.m2n[rel]
            trial_raw.qn[sel] = craw.qn[rel]
            pending = pending[~ok]
            if pending.size == 0:
                break
            lam[pending] *= cfg.ls_shrink
        else:
            # Line search exhausted: accept the last damped trial anyway; the
            # outer residual check decides convergence honestly.
            cand = b[idx[pending]] + lam[pending, None] * step[pending]
            craw = raw_moments_batch(params, band, cand, spec)
            trial_b[pending] = cand
            trial_raw.log_m0[pending] = craw.log_m0
            trial_raw.u[pending] = craw.u
            trial_raw.m2n[pending] = craw.m2n
            trial_raw.qn[pending] = craw.qn

        b[idx] = trial_b
        raw.log_m0[idx] = trial_raw.log_m0
        raw.u[idx] = trial_raw.u
        raw.m2n[idx] = trial_raw.m2n
        raw.qn[idx] = trial_raw.qn
        res[idx] = raw.u[idx] - u[idx]
        merit[idx] = 0.5 * (res[idx] * res[idx]).sum(axis=1)
        rnorm[idx] = np.sqrt(2.0 * merit[idx])
        iters[idx] += 1

    converged = rnorm <= cfg.tol_u
    a = np.log(n) - raw.log_m0
    return BatchSolution(a=a, b=b, iterations=iters, residual=rnorm,
                         converged=converged, raw=raw)


def solve_multipliers(params: MaterialParams, band: Band, target: BandMoments,
                      cfg: SolverConfig = SolverConfig(),
                      warm_start: Multipliers | None = None,
                      spec: QuadratureSpec = QuadratureSpec()) -> Multipliers:
    """Invert the constraints for one target state; deterministic.

    Raises NoConvergence if the iteration budget runs out.
    """
    b0 = None if warm_start is None else np.asarray(warm_start.b, dtype=float)[None, :]
    sol = solve_multipliers_batch(
        params, band, np.array([target.n]), np.asarray(target.u, dtype=float)[None, :],
        cfg, b0=b0, spec=spec)
    if not sol.converged[0]:
        raise NoConvergence(int(sol.iterations[0]), float(sol.residual[0]))
    return Multipliers(a=float(sol.a[0]), b=sol.b[0])


def closure_tensors(params: MaterialParams, band: Band, mult: Multipliers,
                    moments: BandMoments,
                    spec: QuadratureSpec = QuadratureSpec()) -> ClosureTensors:
    """Pressure and averaged inverse-mass tensors at a solved multiplier pair.

    pressure = e^A m2(0, B) and qmass = e^A q(0, B); with A = log n - f(B)
    these carry exactly one factor of the density.
    """
    raw = raw_moments(params, band, np.asarray(mult.b, dtype=float), spec)
    scale = np.exp(mult.a + float(raw.log_m0))
    t = raw.m2n - np.outer(raw.u, raw.u)
    return ClosureTensors(pressure=scale * raw.m2n, qmass=scale * raw.qn, t=t)
