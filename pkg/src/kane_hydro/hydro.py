"""1D finite-volume solver for the closed two-band moment system.

Conserved variables per band are (n, n u) with u a full 3-vector; only
x-derivatives act.  Fluxes are Rusanov with per-cell closure tensors, time
stepping is SSP-RK2, the electric force enters as a cell-centered source on
the momentum components, and interband coupling wraps the hyperbolic update
in exact Strang half-steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closure import SolverConfig, solve_multipliers_batch
from .coupling import CouplingConfig, relax_arrays
from .errors import NoConvergence, PositivityLost
from .field import FieldState, PotentialConfig, build_field
from .grid import Grid1D
from .material import Band, MaterialParams
from .moments import QuadratureSpec

DENSITY_FLOOR = 1e-12


@dataclass(eq=False)
class SimState:
    """Spatial grid plus per-cell conserved variables for both bands.

    b_cache_* hold the warm-start velocity multipliers per cell.
    """

    grid: Grid1D
    t: float
    n_plus: np.ndarray
    mom_plus: np.ndarray
    n_minus: np.ndarray
    mom_minus: np.ndarray
    b_cache_plus: np.ndarray | None = None
    b_cache_minus: np.ndarray | None = None
    field: FieldState | None = None

    def copy(self) -> "SimState":
        return SimState(
            grid=self.grid, t=self.t,
            n_plus=self.n_plus.copy(), mom_plus=self.mom_plus.copy(),
            n_minus=self.n_minus.copy(), mom_minus=self.mom_minus.copy(),
            b_cache_plus=None if self.b_cache_plus is None else self.b_cache_plus.copy(),
            b_cache_minus=None if self.b_cache_minus is None else self.b_cache_minus.copy(),
            field=None if self.field is None else FieldState(
                self.field.v_int.copy(), self.field.v_total.copy(),
                self.field.force_x.copy()),
        )


@dataclass(frozen=True)
class StepReport:
    dt_taken: float
    max_wave_speed: float
    closure_iterations_max: int
    mass_total_plus: float
    mass_total_minus: float
    momentum_total: tuple[float, float, float]


@dataclass(frozen=True)
class HydroConfig:
    cfl: float = 0.4
    solver: SolverConfig = SolverConfig(tol_u=1e-8)
    quadrature: QuadratureSpec = QuadratureSpec()

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")


@dataclass(eq=False)
class _BandFields:
    """Per-cell closure output needed by the flux and source assembly."""

    pressure_row: np.ndarray   # (C, 3) x-row of the pressure tensor
    q_row: np.ndarray          # (C, 3) x-row of the inverse-mass tensor
    wave: np.ndarray           # (C,)   |u_x| + sqrt(3 T_xx)
    b: np.ndarray              # (C, 3) solved multipliers (warm-start cache)
    iterations: int


def _check_positive(n: np.ndarray, t: float, band: str) -> None:
    bad = np.flatnonzero(~(n > DENSITY_FLOOR))
    if bad.size:
        raise PositivityLost(int(bad[0]), t, band)


def _band_closure(params: MaterialParams, band: Band, n: np.ndarray,
                  mom: np.ndarray, cfg: HydroConfig,
                  b0: np.ndarray | None, t: float) -> _BandFields:
    """Batched per-cell closure with the warm-start fallback ladder."""
    u = mom / n[:, None]
    sol = solve_multipliers_batch(params, band, n, u, cfg.solver,
                                  b0=b0, spec=cfg.quadrature)
    iters = int(sol.iterations.max()) if sol.iterations.size else 0
    if not sol.converged.all():
        for fallback in (params.mass * params.beta * u, np.zeros_like(u)):
            bad = ~sol.converged
            retry = solve_multipliers_batch(params, band, n[bad], u[bad],
                                            cfg.solver, b0=fallback[bad],
                                            spec=cfg.quadrature)
            sol.b[bad] = retry.b
            sol.a[bad] = retry.a
            sol.residual[bad] = retry.residual
            sol.raw.log_m0[bad] = retry.raw.log_m0
            sol.raw.u[bad] = retry.raw.u
            sol.raw.m2n[bad] = retry.raw.m2n
            sol.raw.qn[bad] = retry.raw.qn
            sol.converged[bad] = retry.converged
            iters = max(iters, int(retry.iterations.max()))
            if sol.converged.all():
                break
        else:
            cell = int(np.flatnonzero(~sol.converged)[0])
            raise NoConvergence(cfg.solver.max_iter,
                                float(sol.residual[cell]),
                                context=f"cell {cell}, band {band.name}, t={t:.6g}")
    m2n = sol.raw.m2n
    uu = sol.raw.u
    t_xx = m2n[:, 0, 0] - uu[:, 0] * uu[:, 0]
    wave = np.abs(u[:, 0]) + np.sqrt(3.0 * t_xx)
    return _BandFields(pressure_row=n[:, None] * m2n[:, 0, :],
                       q_row=n[:, None] * sol.raw.qn[:, 0, :],
                       wave=wave, b=sol.b, iterations=iters)


def _edge(arr: np.ndarray, boundary: str):
    """Left/right neighbor arrays for face assembly under the grid BCs."""
    if boundary == "periodic":
        return arr, np.roll(arr, -1, axis=0)
    ext = np.concatenate([arr[:1], arr, arr[-1:]], axis=0)
    return ext[:-1], ext[1:]


def band_flux(n: np.ndarray, mom: np.ndarray, fields: _BandFields,
              boundary: str):
    """Rusanov interface fluxes for one band.

    Returns (mass flux, momentum flux) per face; periodic grids carry
    n_cells faces (face j sits between cells j and j+1 cyclically), outflow
    grids n_cells + 1.
    """
    u_x = mom[:, 0] / n
    f_mass = mom[:, 0]
    f_mom = fields.pressure_row
    state = np.concatenate([n[:, None], mom], axis=1)
    flux = np.concatenate([f_mass[:, None], f_mom], axis=1)

    sl, sr = _edge(state, boundary)
    fl, fr = _edge(flux, boundary)
    wl, wr = _edge(fields.wave, boundary)
    lam = np.maximum(wl, wr)
    return 0.5 * (fl + fr) - 0.5 * lam[:, None] * (sr - sl)


def _divergence(face_flux: np.ndarray, boundary: str, dx: float) -> np.ndarray:
    if boundary == "periodic":
        return (face_flux - np.roll(face_flux, 1, axis=0)) / dx
    return (face_flux[1:] - face_flux[:-1]) / dx


def _rhs(params: MaterialParams, grid: Grid1D, cfg: HydroConfig,
         n_p, mom_p, n_m, mom_m, b_p, b_m, force_cell, t):
    """Spatial operator of both bands plus closure metadata."""
    out = {}
    wave_max = 0.0
    iters = 0
    for key, band, n, mom, b0 in (("plus", Band.UPPER, n_p, mom_p, b_p),
                                  ("minus", Band.LOWER, n_m, mom_m, b_m)):
        fields = _band_closure(params, band, n, mom, cfg, b0, t)
        fhat = band_flux(n, mom, fields, grid.boundary)
        div = _divergence(fhat, grid.boundary, grid.dx)
        dn = -div[:, 0]
        dmom = -div[:, 1:]
        if force_cell is not None:
            # Momentum source F.Q: only the x-force acts, picking the x-row of
            # the averaged inverse-mass tensor.
            dmom = dmom + force_cell[:, None] * fields.q_row
        out[key] = (dn, dmom, fields)
        wave_max = max(wave_max, float(fields.wave.max()))
        iters = max(iters, fields.iterations)
    return out, wave_max, iters


def _totals(grid: Grid1D, n_p, mom_p, n_m, mom_m):
    dx = grid.dx
    mom = (mom_p + mom_m).sum(axis=0) * dx
    return float(n_p.sum() * dx), float(n_m.sum() * dx), (float(mom[0]), float(mom[1]), float(mom[2]))


def step(state: SimState, params: MaterialParams, cfg: HydroConfig,
         potential: PotentialConfig | None = None,
         coupling: CouplingConfig | None = None,
         max_dt: float | None = None) -> tuple[SimState, StepReport]:
    """Advance one time step: Poisson solve, Strang coupling half-step,
    SSP-RK2 hyperbolic update with cell-centered forcing, second half-step."""
    grid = state.grid
    coupling = coupling or CouplingConfig()
    n_p, mom_p = state.n_plus, state.mom_plus
    n_m, mom_m = state.n_minus, state.mom_minus
    b_p, b_m = state.b_cache_plus, state.b_cache_minus

    # Lagged field: one Poisson solve per step, frozen across RK stages.
    fld = None
    force_cell = None
    if potential is not None:
        fld = build_field(potential, n_p + n_m, grid)
        force_cell = 0.5 * (fld.force_x[:-1] + fld.force_x[1:])

    # Stage-0 closure fixes dt; reused as the first RK stage when there is no
    # leading relaxation half-step to invalidate it.
    rhs0, wave_max, it0 = _rhs(params, grid, cfg, n_p, mom_p, n_m, mom_m,
                               b_p, b_m, force_cell, state.t)
    dt = cfg.cfl * grid.dx / wave_max
    if max_dt is not None:
        dt = min(dt, max_dt)
    iters = it0

    if coupling.mechanism != "none":
        n_p, mom_p, n_m, mom_m = relax_arrays(coupling, n_p, mom_p, n_m, mom_m, dt / 2.0)
        _check_positive(n_p, state.t, "plus")
        _check_positive(n_m, state.t, "minus")
        rhs0, _, it0 = _rhs(params, grid, cfg, n_p, mom_p, n_m, mom_m,
                            b_p, b_m, force_cell, state.t)
        iters = max(iters, it0)

    # SSP-RK2 (Heun): U1 = U + dt L(U); U2 = (U + U1 + dt L(U1)) / 2.
    dn_p, dmom_p, f_p = rhs0["plus"]
    dn_m, dmom_m, f_m = rhs0["minus"]
    n_p1 = n_p + dt * dn_p
    mom_p1 = mom_p + dt * dmom_p
    n_m1 = n_m + dt * dn_m
    mom_m1 = mom_m + dt * dmom_m
    _check_positive(n_p1, state.t, "plus")
    _check_positive(n_m1, state.t, "minus")

    rhs1, _, it1 = _rhs(params, grid, cfg, n_p1, mom_p1, n_m1, mom_m1,
                        f_p.b, f_m.b, force_cell, state.t)
    iters = max(iters, it1)
    dn_p1, dmom_p1, f_p1 = rhs1["plus"]
    dn_m1, dmom_m1, f_m1 = rhs1["minus"]
    n_p = 0.5 * n_p + 0.5 * (n_p1 + dt * dn_p1)
    mom_p = 0.5 * mom_p + 0.5 * (mom_p1 + dt * dmom_p1)
    n_m = 0.5 * n_m + 0.5 * (n_m1 + dt * dn_m1)
    mom_m = 0.5 * mom_m + 0.5 * (mom_m1 + dt * dmom_m1)
    _check_positive(n_p, state.t, "plus")
    _check_positive(n_m, state.t, "minus")

    if coupling.mechanism != "none":
        n_p, mom_p, n_m, mom_m = relax_arrays(coupling, n_p, mom_p, n_m, mom_m, dt / 2.0)
        _check_positive(n_p, state.t, "plus")
        _check_positive(n_m, state.t, "minus")

    new_state = SimState(grid=grid, t=state.t + dt,
                         n_plus=n_p, mom_plus=mom_p,
                         n_minus=n_m, mom_minus=mom_m,
                         b_cache_plus=f_p1.b, b_cache_minus=f_m1.b,
                         field=fld)
    mass_p, mass_m, mom_tot = _totals(grid, n_p, mom_p, n_m, mom_m)
    report = StepReport(dt_taken=dt, max_wave_speed=wave_max,
                        closure_iterations_max=iters,
                        mass_total_plus=mass_p, mass_total_minus=mass_m,
                        momentum_total=mom_tot)
    return new_state, report


def run(initial: SimState, params: MaterialParams, cfg: HydroConfig,
        t_end: float, snapshot_every: float | None = None,
        potential: PotentialConfig | None = None,
        coupling: CouplingConfig | None = None):
    """March to t_end, returning (snapshots, reports).

    Snapshots are deep copies taken at t=0, whenever t crosses a multiple of
    snapshot_every, and at t_end.  Steps are clipped to land on t_end exactly.
    """
    if t_end < initial.t:
        raise ValueError("t_end must be >= the initial time")
    state = initial.copy()
    if state.field is None and potential is not None:
        state.field = build_field(potential, state.n_plus + state.n_minus, state.grid)
    snapshots = [state.copy()]
    reports: list[StepReport] = []
    next_emit = None if snapshot_every is None else state.t + snapshot_every
    eps = 1e-12 * max(1.0, abs(t_end))
    while state.t < t_end - eps:
        state, rep = step(state, params, cfg, potential=potential,
                          coupling=coupling, max_dt=t_end - state.t)
        reports.append(rep)
        if next_emit is not None:
            emitted = False
            while state.t >= next_emit - eps:
                next_emit += snapshot_every
                if not emitted:
                    snapshots.append(state.copy())
                    emitted = True
    if abs(snapshots[-1].t - state.t) > eps:
        snapshots.append(state.copy())
    return snapshots, reports
