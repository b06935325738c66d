"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
(run with -s to see them).  Criterion 10 demands a negative eigenvalue of the
averaged lower-band mass tensor at zero drift; that tensor is provably
positive definite (it equals beta times the pressure tensor), so the test
fails by design and documents the discrepancy.
"""

import json
import time
from pathlib import Path

import numpy as np
import pytest

import sys
sys.path.insert(0, str(Path(__file__).parent))
from euler_oracle import isothermal_euler_run

from kane_hydro import (Band, BandMoments, CouplingConfig, Grid1D,
                        MaterialParams, Multipliers, NoConvergence,
                        PotentialConfig, QuadratureSpec, SimState, SolverConfig,
                        closure_tensors, grad_f, hess_f, integrate_moments,
                        run, solve_multipliers, solve_poisson, step)
from kane_hydro.cli import main
from kane_hydro.hydro import HydroConfig

REDUCED = QuadratureSpec()
FULL3D = QuadratureSpec(backend="full3d")


def report(num: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"ACCEPTANCE {num:2d} {name}: {status}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def random_case(rng):
    d = rng.standard_normal(3)
    alpha = d / np.linalg.norm(d) * rng.uniform(0.0, 1.5)
    params = MaterialParams(alpha=alpha, gamma=rng.uniform(0.2, 2.0))
    band = Band.UPPER if rng.random() < 0.5 else Band.LOWER
    return params, band


def test_01_closure_round_trip():
    rng = np.random.default_rng(101)
    cfg = SolverConfig(tol_u=1e-10, max_iter=100)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        params, band = random_case(rng)
        b0 = rng.standard_normal(3)
        b0 *= rng.uniform(0.0, 5.0) / np.linalg.norm(b0)
        u = grad_f(params, band, b0)
        try:
            mult = solve_multipliers(params, band, BandMoments(n=1.0, u=u), cfg=cfg)
        except NoConvergence:
            report(1, "closure-round-trip", False, "NoConvergence")
        worst = max(worst, float(np.abs(mult.b - b0).max()))
    elapsed = time.perf_counter() - t0
    report(1, "closure-round-trip", worst < 1e-7 and elapsed < 30.0,
           f"max err {worst:.2e}, {elapsed:.1f}s")


def test_02_hessian_spd_and_fd():
    rng = np.random.default_rng(102)
    h = 1e-4
    min_eig = np.inf
    worst_fd = 0.0
    for _ in range(100):
        params, band = random_case(rng)
        B = rng.standard_normal(3) * 2.0
        hess = hess_f(params, band, B)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(hess)[0]))
        fd = np.zeros((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd[:, j] = (grad_f(params, band, B + e) - grad_f(params, band, B - e)) / (2 * h)
        worst_fd = max(worst_fd, float(np.abs(fd - hess).max() / np.abs(hess).max()))
    report(2, "hessian-spd-fd", min_eig > 0.0 and worst_fd < 1e-5,
           f"min eig {min_eig:.3e}, fd err {worst_fd:.2e}")


def test_03_pressure_decomposition():
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(50):
        params, band = random_case(rng)
        A = rng.uniform(-2.0, 2.0)
        B = rng.standard_normal(3) * 1.5
        mom = integrate_moments(params, band, A, B, REDUCED)
        n = mom.m0
        u = mom.m1 / n
        tens = closure_tensors(params, band, Multipliers(a=A, b=B),
                               BandMoments(n=n, u=u))
        recon = n * np.outer(u, u) + n * hess_f(params, band, B)
        err = np.linalg.norm(tens.pressure - recon) / np.linalg.norm(tens.pressure)
        worst = max(worst, float(err))
    report(3, "pressure-decomposition", worst < 1e-6, f"max rel err {worst:.2e}")


def test_04_backend_cross_validation():
    rng = np.random.default_rng(104)
    worst = 0.0
    for _ in range(50):
        params, band = random_case(rng)
        B = rng.standard_normal(3)
        B *= rng.uniform(0.0, 5.0) / np.linalg.norm(B)
        r = integrate_moments(params, band, 0.0, B, REDUCED)
        f = integrate_moments(params, band, 0.0, B, FULL3D)
        scale = r.m0
        errs = [abs(r.m0 - f.m0) / scale]
        for a, b in ((r.m1, f.m1), (r.m2, f.m2), (r.q, f.q)):
            denom = np.maximum(np.abs(a), 1e-9 * scale)
            errs.append(float(np.abs(a - b).max() / denom.max()))
            errs.append(float((np.abs(a - b) / denom).max()))
        worst = max(worst, max(errs))
    report(4, "quadrature-backends", worst < 1e-7, f"max rel err {worst:.2e}")


def test_05_parabolic_limit():
    ok = True
    detail = []
    for mass, beta in ((1.0, 1.0), (1.7, 0.6)):
        params = MaterialParams(alpha=np.zeros(3), gamma=0.5, mass=mass, beta=beta)
        n, u = 1.3, np.array([0.4, -0.2, 0.6])
        target = BandMoments(n=n, u=u)
        for spec in (REDUCED, FULL3D):
            mult = solve_multipliers(params, Band.UPPER, target, spec=spec)
            tens = closure_tensors(params, Band.UPPER, mult, target, spec=spec)
            want_b = mass * beta * u
            want_p = n * np.outer(u, u) + (n / (mass * beta)) * np.eye(3)
            want_q = (n / mass) * np.eye(3)
            ok &= np.abs(mult.b - want_b).max() / np.abs(want_b).max() < 1e-9
            ok &= np.abs(tens.pressure - want_p).max() / np.abs(want_p).max() < 1e-9
            ok &= np.abs(tens.qmass - want_q).max() / np.abs(want_q).max() < 1e-9

    # Gaussian-pulse run against the independently coded classical solver
    grid = Grid1D(n_cells=64, x_min=0.0, x_max=1.0, boundary="periodic")
    params = MaterialParams(alpha=np.zeros(3), gamma=0.5)
    x = grid.centers()
    n0 = 1.0 + 0.4 * np.exp(-0.5 * ((x - 0.5) / 0.08) ** 2)
    u0 = np.zeros((64, 3))
    u0[:, 0] = 0.2
    state = SimState(grid=grid, t=0.0, n_plus=n0.copy(), mom_plus=n0[:, None] * u0,
                     n_minus=n0.copy(), mom_minus=n0[:, None] * u0)
    cfg = HydroConfig(solver=SolverConfig(tol_u=1e-12))
    snaps, _ = run(state, params, cfg, t_end=0.15)
    n_ref, mom_ref = isothermal_euler_run(n0, u0, 1.0, grid.dx, cfg.cfl, 0.15)
    l1 = (np.abs(snaps[-1].n_plus - n_ref).sum()
          + np.abs(snaps[-1].mom_plus - mom_ref).sum()) * grid.dx
    ok &= l1 < 1e-10
    detail.append(f"euler L1 {l1:.2e}")
    report(5, "parabolic-analytic-limit", bool(ok), ", ".join(detail))


def test_06_large_tilt_asymptotics():
    dirs = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [1, -1, 1], [-1, 0, 1]],
                    dtype=float)
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    worst = 0.0
    for alpha, gamma in (((1.2, -0.4, 0.3), 0.5), ((1.5, 0.0, 0.0), 0.2),
                         ((0.3, 0.3, 0.0), 2.0)):
        params = MaterialParams(alpha=np.array(alpha), gamma=gamma)
        for band in Band:
            for t in (10.0, 20.0, 40.0):
                for e in dirs:
                    B = t * e
                    dev = float(np.linalg.norm(grad_f(params, band, B) - B))
                    worst = max(worst, dev / params.alpha_norm)
    report(6, "large-tilt-asymptotics", worst <= 1.0, f"max dev/|alpha| {worst:.3f}")


def _conservation_run(mechanism, n_steps=1000):
    grid = Grid1D(n_cells=16, x_min=0.0, x_max=1.0, boundary="periodic")
    params = MaterialParams(alpha=np.array([0.5, 0.3, 0.0]), gamma=0.7)
    x = grid.centers()
    n_p = 1.0 + 0.3 * np.exp(-0.5 * ((x - 0.5) / 0.1) ** 2)
    n_m = 1.1 + 0.2 * np.exp(-0.5 * ((x - 0.3) / 0.12) ** 2)
    u = np.zeros((16, 3))
    u[:, 0] = 0.2
    u[:, 1] = -0.1
    state = SimState(grid=grid, t=0.0, n_plus=n_p.copy(), mom_plus=n_p[:, None] * u,
                     n_minus=n_m.copy(), mom_minus=n_m[:, None] * (0.5 * u))
    # band_relaxation empties the upper band as e^{-t/tau}; tau is sized so a
    # thousand steps stay well clear of the vacuum floor
    tau = 1.0 if mechanism == "band_relaxation" else 0.3
    coupling = CouplingConfig(mechanism=mechanism, tau=tau) \
        if mechanism != "none" else CouplingConfig()
    cfg = HydroConfig()
    dx = grid.dx

    def tot(s):
        return (s.n_plus.sum() * dx, s.n_minus.sum() * dx,
                (s.mom_plus + s.mom_minus).sum(axis=0) * dx)
    t0 = tot(state)
    for _ in range(n_steps):
        state, _ = step(state, params, cfg, coupling=coupling)
    t1 = tot(state)
    return t0, t1


def test_07_conservation_suite():
    ok = True
    details = []
    (mp0, mm0, mom0), (mp1, mm1, mom1) = _conservation_run("none")
    d_mass_p = abs(mp1 - mp0) / mp0
    d_mass_m = abs(mm1 - mm0) / mm0
    d_mom = np.abs(mom1 - mom0).max()
    ok &= d_mass_p < 1e-12 and d_mass_m < 1e-12 and d_mom < 1e-12
    details.append(f"none: mass {max(d_mass_p, d_mass_m):.1e} mom {d_mom:.1e}")
    for mech in ("band_flip", "band_relaxation", "isotropic"):
        (mp0, mm0, mom0), (mp1, mm1, mom1) = _conservation_run(mech)
        d_tot = abs((mp1 + mm1) - (mp0 + mm0)) / (mp0 + mm0)
        ok &= d_tot < 1e-12
        if mech in ("band_flip", "band_relaxation"):
            d_mom = np.abs(mom1 - mom0).max()
            ok &= d_mom < 1e-12
            details.append(f"{mech}: mass {d_tot:.1e} mom {d_mom:.1e}")
        else:
            details.append(f"{mech}: mass {d_tot:.1e}")
    report(7, "conservation-suite", bool(ok), "; ".join(details))


def test_08_homogeneous_relaxation_rates():
    grid = Grid1D(n_cells=8, x_min=0.0, x_max=1.0, boundary="periodic")
    params = MaterialParams(alpha=np.array([0.4, 0.2, 0.0]), gamma=0.9)

    def uniform_state():
        return SimState(grid=grid, t=0.0,
                        n_plus=np.full(8, 2.0), mom_plus=np.zeros((8, 3)),
                        n_minus=np.full(8, 1.0), mom_minus=np.zeros((8, 3)))

    tau = 0.8
    snaps, _ = run(uniform_state(), params, HydroConfig(), t_end=tau,
                   coupling=CouplingConfig(mechanism="band_flip", tau=tau))
    pol = snaps[-1].n_plus[0] - snaps[-1].n_minus[0]
    err_bf = abs(pol - np.exp(-2.0)) / np.exp(-2.0)

    snaps, _ = run(uniform_state(), params, HydroConfig(), t_end=tau,
                   coupling=CouplingConfig(mechanism="band_relaxation", tau=tau))
    err_br = abs(snaps[-1].n_plus[0] / 2.0 - np.exp(-1.0)) / np.exp(-1.0)
    report(8, "homogeneous-relaxation-rates", err_bf < 1e-10 and err_br < 1e-10,
           f"band_flip {err_bf:.2e}, band_relaxation {err_br:.2e}")


def test_09_poisson_manufactured():
    cfg = PotentialConfig(poisson_enabled=True, eps_q=1.0)
    grid = Grid1D(n_cells=32, x_min=0.0, x_max=1.0, boundary="outflow")
    x = grid.centers()
    v = solve_poisson(cfg, np.full(32, 2.0), grid)
    quad_err = float(np.abs(v - x * (1 - x)).max())

    errs = []
    for n in (64, 128, 256):
        g = Grid1D(n_cells=n, x_min=0.0, x_max=1.0, boundary="outflow")
        xx = g.centers()
        rho = -(2.0 - 12.0 * xx + 12.0 * xx * xx)
        vv = solve_poisson(cfg, rho, g)
        errs.append(np.abs(vv - xx**2 * (1 - xx) ** 2).max())
    orders = [float(np.log2(errs[i] / errs[i + 1])) for i in range(2)]
    ok = quad_err < 1e-12 and all(1.9 <= o <= 2.1 for o in orders)
    report(9, "poisson-manufactured", ok,
           f"quad err {quad_err:.1e}, orders {orders[0]:.2f}/{orders[1]:.2f}")


def test_10_negative_mass_witness():
    # Criterion: the averaged lower-band mass tensor at rest has a negative
    # eigenvalue for gamma=0.2, |alpha|=1, m=beta=1.  The exact identity
    # <M^{-1}> = beta <v x v> at zero tilt makes it positive definite
    # instead (only the pointwise tensor goes negative), so this fails.
    params = MaterialParams(alpha=np.array([1.0, 0.0, 0.0]), gamma=0.2)
    target = BandMoments(n=1.0, u=np.zeros(3))
    eigs = []
    for spec in (REDUCED, FULL3D):
        mult = solve_multipliers(params, Band.LOWER, target, spec=spec)
        tens = closure_tensors(params, Band.LOWER, mult, target, spec=spec)
        eigs.append(float(np.linalg.eigvalsh(tens.qmass)[0]))
    ok = all(e < 0.0 for e in eigs)
    report(10, "negative-mass-witness", ok,
           f"min eigenvalues {eigs[0]:.4f}/{eigs[1]:.4f}, both backends agree")


def test_11_determinism(tmp_path):
    doc = {
        "material": {"alpha": [0.5, 0.2, 0.0], "gamma": 0.7},
        "grid": {"n_cells": 24, "x_min": 0.0, "x_max": 1.0, "boundary": "periodic"},
        "initial": {
            "plus": {"n": {"shape": "gaussian_pulse", "amplitude": 0.3,
                           "baseline": 1.0, "center": 0.4, "width": 0.1},
                     "u": {"shape": "uniform", "value": [0.1, 0.0, 0.0]}},
            "minus": {"n": {"shape": "uniform", "value": 1.0},
                      "u": {"shape": "uniform", "value": [0.0, 0.0, 0.0]}},
        },
        "coupling": {"mechanism": "band_flip", "tau": 0.5},
        "output": {"t_end": 0.05, "snapshot_every": 0.025, "out_dir": "unused"},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(doc))
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["run", "--config", str(cfg_path), "--out", str(out1)]) == 0
    assert main(["run", "--config", str(cfg_path), "--out", str(out2)]) == 0
    names1 = sorted(f.name for f in out1.glob("snap_*.csv"))
    names2 = sorted(f.name for f in out2.glob("snap_*.csv"))
    identical = names1 == names2 and all(
        (out1 / n).read_bytes() == (out2 / n).read_bytes() for n in names1)
    report(11, "run-determinism", identical, f"{len(names1)} snapshot files")
