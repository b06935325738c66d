"""Configuration parsing, run orchestration, and fixed output formats.

Config files are JSON documents; every key is validated with its full path
and unknown keys are rejected.  Snapshot CSVs carry a fixed 12-column header
and 17-significant-digit floats with '.' decimals and LF line endings, so
identical configs reproduce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .closure import (BandMoments, Multipliers, SolverConfig, closure_tensors,
                      grad_f, hess_f, solve_multipliers, solve_multipliers_batch)
from .coupling import MECHANISMS, CouplingConfig
from .errors import KaneHydroError, NoConvergence, ParseError, PositivityLost
from .field import PROFILES, PotentialConfig, build_field
from .grid import BOUNDARIES, Grid1D
from .hydro import HydroConfig, SimState, run
from .material import Band, MaterialParams
from .moments import BACKENDS, QuadratureSpec

SNAPSHOT_HEADER = ("x,n_plus,ux_plus,uy_plus,uz_plus,"
                   "n_minus,ux_minus,uy_minus,uz_minus,v_int,v_total,t")

BAND_NAMES = {"plus": Band.UPPER, "minus": Band.LOWER}

N_SHAPES = ("uniform", "gaussian_pulse", "step")


@dataclass(frozen=True)
class Profile:
    """Initial-condition shape for a scalar density or a 3-vector velocity."""

    shape: str
    params: dict

    def evaluate(self, x: np.ndarray, x_mid: float, vector: bool) -> np.ndarray:
        p = self.params
        def broad(val):
            val = np.asarray(val, dtype=float)
            if vector:
                return np.broadcast_to(val, (x.size, 3)).copy()
            return np.full(x.size, float(val))
        if self.shape == "uniform":
            return broad(p["value"])
        if self.shape == "gaussian_pulse":
            bump = np.exp(-0.5 * ((x - p["center"]) / p["width"]) ** 2)
            base = broad(p["baseline"])
            amp = np.asarray(p["amplitude"], dtype=float)
            if vector:
                return base + bump[:, None] * amp
            return base + bump * float(amp)
        left, right = broad(p["left"]), broad(p["right"])
        mask = x < x_mid
        return np.where(mask[:, None] if vector else mask, left, right)


@dataclass(frozen=True)
class InitialConfig:
    n_plus: Profile
    u_plus: Profile
    n_minus: Profile
    u_minus: Profile


@dataclass(frozen=True)
class OutputConfig:
    t_end: float
    snapshot_every: float | None = None
    out_dir: str = "out"


@dataclass(frozen=True, eq=False)
class RunConfig:
    material: MaterialParams
    grid: Grid1D
    initial: InitialConfig
    potential: PotentialConfig
    coupling: CouplingConfig
    numerics: HydroConfig
    output: OutputConfig

    def __eq__(self, other):
        if not isinstance(other, RunConfig):
            return NotImplemented
        return serialize_config(self) == serialize_config(other)


def _section(doc: dict, name: str, required: bool, path: str = "") -> dict:
    if name not in doc:
        if required:
            raise ParseError(name, "missing required section")
        return {}
    val = doc[name]
    if not isinstance(val, dict):
        raise ParseError(f"{path}{name}", "must be an object")
    return dict(val)


def _take(sec: dict, path: str, key: str, default=None, required: bool = False):
    if key not in sec:
        if required:
            raise ParseError(f"{path}.{key}", "missing required key")
        return default
    return sec.pop(key)


def _no_extras(sec: dict, path: str) -> None:
    if sec:
        raise ParseError(f"{path}.{sorted(sec)[0]}", "unknown key")


def _positive(val, path: str) -> float:
    try:
        out = float(val)
    except (TypeError, ValueError):
        raise ParseError(path, "must be a number") from None
    if not out > 0.0:
        raise ParseError(path, "must be > 0")
    return out


def _number(val, path: str) -> float:
    try:
        return float(val)
    except (TypeError, ValueError):
        raise ParseError(path, "must be a number") from None


def _parse_profile(sec, path: str, vector: bool) -> Profile:
    if not isinstance(sec, dict):
        raise ParseError(path, "must be an object")
    sec = dict(sec)
    shape = _take(sec, path, "shape", required=True)
    if shape not in N_SHAPES:
        raise ParseError(f"{path}.shape", f"must be one of {N_SHAPES}")
    def value(key):
        raw = _take(sec, path, key, required=True)
        arr = np.asarray(raw, dtype=float)
        if vector and arr.shape != (3,):
            raise ParseError(f"{path}.{key}", "must be a 3-vector")
        if not vector and arr.shape != ():
            raise ParseError(f"{path}.{key}", "must be a scalar")
        return arr.tolist()
    params = {}
    if shape == "uniform":
        params["value"] = value("value")
    elif shape == "gaussian_pulse":
        params["amplitude"] = value("amplitude")
        params["baseline"] = value("baseline")
        params["center"] = _number(_take(sec, path, "center", required=True), f"{path}.center")
        params["width"] = _positive(_take(sec, path, "width", required=True), f"{path}.width")
    else:
        params["left"] = value("left")
        params["right"] = value("right")
    _no_extras(sec, path)
    return Profile(shape=shape, params=params)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a JSON run configuration."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("<document>", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("<document>", "top level must be an object")
    doc = dict(doc)

    sec = _section(doc, "material", required=True)
    doc.pop("material")
    alpha = _take(sec, "material", "alpha", default=[0.0, 0.0, 0.0])
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (3,):
        raise ParseError("material.alpha", "must be a 3-vector")
    gamma = _positive(_take(sec, "material", "gamma", required=True), "material.gamma")
    mass = _positive(_take(sec, "material", "mass", default=1.0), "material.mass")
    beta = _positive(_take(sec, "material", "beta", default=1.0), "material.beta")
    _no_extras(sec, "material")
    material = MaterialParams(alpha=alpha, gamma=gamma, mass=mass, beta=beta)

    sec = _section(doc, "grid", required=True)
    doc.pop("grid")
    n_cells = _take(sec, "grid", "n_cells", required=True)
    if not isinstance(n_cells, int) or n_cells < 4:
        raise ParseError("grid.n_cells", "must be an integer >= 4")
    x_min = _number(_take(sec, "grid", "x_min", required=True), "grid.x_min")
    x_max = _number(_take(sec, "grid", "x_max", required=True), "grid.x_max")
    if not x_max > x_min:
        raise ParseError("grid.x_max", "must exceed x_min")
    boundary = _take(sec, "grid", "boundary", default="periodic")
    if boundary not in BOUNDARIES:
        raise ParseError("grid.boundary", f"must be one of {BOUNDARIES}")
    _no_extras(sec, "grid")
    grid = Grid1D(n_cells=n_cells, x_min=x_min, x_max=x_max, boundary=boundary)

    sec = _section(doc, "initial", required=True)
    doc.pop("initial")
    bands = {}
    for bname in ("plus", "minus"):
        bsec = _section(sec, bname, required=True, path="initial.")
        sec.pop(bname)
        nprof = _parse_profile(_take(bsec, f"initial.{bname}", "n", required=True),
                               f"initial.{bname}.n", vector=False)
        uprof = _parse_profile(_take(bsec, f"initial.{bname}", "u", required=True),
                               f"initial.{bname}.u", vector=True)
        _no_extras(bsec, f"initial.{bname}")
        bands[bname] = (nprof, uprof)
    _no_extras(sec, "initial")
    initial = InitialConfig(n_plus=bands["plus"][0], u_plus=bands["plus"][1],
                            n_minus=bands["minus"][0], u_minus=bands["minus"][1])

    sec = _section(doc, "potential", required=False)
    doc.pop("potential", None)
    vsec = _take(sec, "potential", "v_ext", default={"profile": "zero"})
    if not isinstance(vsec, dict):
        raise ParseError("potential.v_ext", "must be an object")
    vsec = dict(vsec)
    prof = _take(vsec, "potential.v_ext", "profile", default="zero")
    if prof not in PROFILES:
        raise ParseError("potential.v_ext.profile", f"must be one of {PROFILES}")
    kwargs = dict(profile=prof)
    if prof == "linear":
        kwargs["slope"] = _number(_take(vsec, "potential.v_ext", "slope", required=True),
                                  "potential.v_ext.slope")
    elif prof == "barrier":
        kwargs["height"] = _number(_take(vsec, "potential.v_ext", "height", required=True),
                                   "potential.v_ext.height")
        kwargs["center"] = _number(_take(vsec, "potential.v_ext", "center", required=True),
                                   "potential.v_ext.center")
        kwargs["width"] = _positive(_take(vsec, "potential.v_ext", "width", required=True),
                                    "potential.v_ext.width")
    elif prof == "tabulated":
        samples = np.asarray(_take(vsec, "potential.v_ext", "samples", required=True),
                             dtype=float)
        if samples.shape != (grid.n_cells,):
            raise ParseError("potential.v_ext.samples",
                             "length must equal grid.n_cells")
        kwargs["samples"] = samples
    _no_extras(vsec, "potential.v_ext")
    kwargs["poisson_enabled"] = bool(_take(sec, "potential", "poisson_enabled", default=False))
    eps_q = _number(_take(sec, "potential", "eps_q", default=0.0), "potential.eps_q")
    if eps_q < 0.0:
        raise ParseError("potential.eps_q", "must be >= 0")
    kwargs["eps_q"] = eps_q
    kwargs["v_left"] = _number(_take(sec, "potential", "v_left", default=0.0), "potential.v_left")
    kwargs["v_right"] = _number(_take(sec, "potential", "v_right", default=0.0), "potential.v_right")
    _no_extras(sec, "potential")
    potential = PotentialConfig(**kwargs)

    sec = _section(doc, "coupling", required=False)
    doc.pop("coupling", None)
    mechanism = _take(sec, "coupling", "mechanism", default="none")
    if mechanism not in MECHANISMS:
        raise ParseError("coupling.mechanism", f"must be one of {MECHANISMS}")
    tau = _take(sec, "coupling", "tau", default=None)
    _no_extras(sec, "coupling")
    if mechanism == "none" and tau is not None:
        raise ParseError("coupling.tau", "must be omitted when mechanism is 'none'")
    if mechanism != "none":
        tau = _positive(tau, "coupling.tau") if tau is not None else None
        if tau is None:
            raise ParseError("coupling.tau", "required for an active mechanism")
    coupling = CouplingConfig(mechanism=mechanism, tau=tau)

    sec = _section(doc, "numerics", required=False)
    doc.pop("numerics", None)
    cfl = _positive(_take(sec, "numerics", "cfl", default=0.4), "numerics.cfl")
    if cfl > 1.0:
        raise ParseError("numerics.cfl", "must be <= 1")
    tol_u = _positive(_take(sec, "numerics", "tol_u", default=1e-8), "numerics.tol_u")
    max_iter = _take(sec, "numerics", "max_iter", default=100)
    if not isinstance(max_iter, int) or max_iter < 1:
        raise ParseError("numerics.max_iter", "must be an integer >= 1")
    qsec = _take(sec, "numerics", "quadrature", default={})
    if not isinstance(qsec, dict):
        raise ParseError("numerics.quadrature", "must be an object")
    qsec = dict(qsec)
    backend = _take(qsec, "numerics.quadrature", "backend", default="reduced1d")
    if backend not in BACKENDS:
        raise ParseError("numerics.quadrature.backend", f"must be one of {BACKENDS}")
    nodes_1d = _take(qsec, "numerics.quadrature", "nodes_1d", default=64)
    nodes_3d = _take(qsec, "numerics.quadrature", "nodes_3d_per_axis", default=32)
    for name, val in (("nodes_1d", nodes_1d), ("nodes_3d_per_axis", nodes_3d)):
        if not isinstance(val, int) or val < 8:
            raise ParseError(f"numerics.quadrature.{name}", "must be an integer >= 8")
    _no_extras(qsec, "numerics.quadrature")
    _no_extras(sec, "numerics")
    numerics = HydroConfig(cfl=cfl,
                           solver=SolverConfig(tol_u=tol_u, max_iter=max_iter),
                           quadrature=QuadratureSpec(backend=backend, nodes_1d=nodes_1d,
                                                     nodes_3d_per_axis=nodes_3d))

    sec = _section(doc, "output", required=False)
    doc.pop("output", None)
    t_end = _number(_take(sec, "output", "t_end", default=0.0), "output.t_end")
    if t_end < 0.0:
        raise ParseError("output.t_end", "must be >= 0")
    snap = _take(sec, "output", "snapshot_every", default=None)
    if snap is not None:
        snap = _positive(snap, "output.snapshot_every")
    out_dir = _take(sec, "output", "out_dir", default="out")
    if not isinstance(out_dir, str):
        raise ParseError("output.out_dir", "must be a string")
    _no_extras(sec, "output")
    output = OutputConfig(t_end=t_end, snapshot_every=snap, out_dir=out_dir)

    if doc:
        raise ParseError(sorted(doc)[0], "unknown key")
    return RunConfig(material=material, grid=grid, initial=initial,
                     potential=potential, coupling=coupling,
                     numerics=numerics, output=output)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical JSON form; parse(serialize(cfg)) reproduces cfg."""
    def profile_doc(p: Profile) -> dict:
        return {"shape": p.shape, **p.params}
    pot = cfg.potential
    v_ext: dict = {"profile": pot.profile}
    if pot.profile == "linear":
        v_ext["slope"] = pot.slope
    elif pot.profile == "barrier":
        v_ext.update(height=pot.height, center=pot.center, width=pot.width)
    elif pot.profile == "tabulated":
        v_ext["samples"] = np.asarray(pot.samples).tolist()
    doc = {
        "material": {"alpha": cfg.material.alpha.tolist(), "gamma": cfg.material.gamma,
                     "mass": cfg.material.mass, "beta": cfg.material.beta},
        "grid": {"n_cells": cfg.grid.n_cells, "x_min": cfg.grid.x_min,
                 "x_max": cfg.grid.x_max, "boundary": cfg.grid.boundary},
        "initial": {"plus": {"n": profile_doc(cfg.initial.n_plus),
                             "u": profile_doc(cfg.initial.u_plus)},
                    "minus": {"n": profile_doc(cfg.initial.n_minus),
                              "u": profile_doc(cfg.initial.u_minus)}},
        "potential": {"v_ext": v_ext, "poisson_enabled": pot.poisson_enabled,
                      "eps_q": pot.eps_q, "v_left": pot.v_left, "v_right": pot.v_right},
        "coupling": ({"mechanism": cfg.coupling.mechanism, "tau": cfg.coupling.tau}
                     if cfg.coupling.mechanism != "none"
                     else {"mechanism": "none"}),
        "numerics": {"cfl": cfg.numerics.cfl, "tol_u": cfg.numerics.solver.tol_u,
                     "max_iter": cfg.numerics.solver.max_iter,
                     "quadrature": {"backend": cfg.numerics.quadrature.backend,
                                    "nodes_1d": cfg.numerics.quadrature.nodes_1d,
                                    "nodes_3d_per_axis": cfg.numerics.quadrature.nodes_3d_per_axis}},
        "output": {"t_end": cfg.output.t_end, "snapshot_every": cfg.output.snapshot_every,
                   "out_dir": cfg.output.out_dir},
    }
    return json.dumps(doc, indent=2)


def _fmt(val: float) -> str:
    return f"{float(val):.17g}"


def initial_state(cfg: RunConfig) -> SimState:
    x = cfg.grid.centers()
    x_mid = 0.5 * (cfg.grid.x_min + cfg.grid.x_max)
    n_p = cfg.initial.n_plus.evaluate(x, x_mid, vector=False)
    u_p = cfg.initial.u_plus.evaluate(x, x_mid, vector=True)
    n_m = cfg.initial.n_minus.evaluate(x, x_mid, vector=False)
    u_m = cfg.initial.u_minus.evaluate(x, x_mid, vector=True)
    for name, arr in (("plus", n_p), ("minus", n_m)):
        if not np.all(arr > 0.0):
            raise ParseError(f"initial.{name}.n", "initial density must be > 0 everywhere")
    mb = cfg.material.mass * cfg.material.beta
    return SimState(grid=cfg.grid, t=0.0,
                    n_plus=n_p, mom_plus=n_p[:, None] * u_p,
                    n_minus=n_m, mom_minus=n_m[:, None] * u_m,
                    b_cache_plus=mb * u_p, b_cache_minus=mb * u_m)


def write_snapshot(path: Path, state: SimState, cfg: RunConfig) -> None:
    x = state.grid.centers()
    u_p = state.mom_plus / state.n_plus[:, None]
    u_m = state.mom_minus / state.n_minus[:, None]
    if state.field is not None:
        v_int, v_total = state.field.v_int, state.field.v_total
    else:
        fld = build_field(cfg.potential, state.n_plus + state.n_minus, state.grid)
        v_int, v_total = fld.v_int, fld.v_total
    lines = [SNAPSHOT_HEADER]
    for i in range(state.grid.n_cells):
        row = [x[i], state.n_plus[i], u_p[i, 0], u_p[i, 1], u_p[i, 2],
               state.n_minus[i], u_m[i, 0], u_m[i, 1], u_m[i, 2],
               v_int[i], v_total[i], state.t]
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


def _print_tensor(name: str, t: np.ndarray) -> None:
    for i in range(3):
        prefix = f"{name}:" if i == 0 else " " * (len(name) + 1)
        print(f"{prefix} " + " ".join(_fmt(t[i, j]) for j in range(3)))


def cmd_closure(cfg: RunConfig, n: float, u: np.ndarray, band_name: str) -> int:
    band = BAND_NAMES[band_name]
    solver = cfg.numerics.solver
    spec = cfg.numerics.quadrature
    try:
        target = BandMoments(n=n, u=u)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        sol = solve_multipliers_batch(cfg.material, band, np.array([n]), u[None, :],
                                      solver, spec=spec)
    except KaneHydroError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    tensors = closure_tensors(cfg.material, band,
                              mult=Multipliers(a=float(sol.a[0]), b=sol.b[0]),
                              moments=target, spec=spec)
    print(f"band: {band_name}")
    print(f"A: {_fmt(sol.a[0])}")
    print("B: " + " ".join(_fmt(v) for v in sol.b[0]))
    print(f"iterations: {int(sol.iterations[0])}")
    print(f"residual: {_fmt(sol.residual[0])}")
    _print_tensor("P", tensors.pressure)
    _print_tensor("Q", tensors.qmass)
    _print_tensor("T", tensors.t)
    if not sol.converged[0]:
        print("error: no convergence", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(cfg: RunConfig, band_name: str, b_max: float, steps: int,
              direction: np.ndarray, out_path: Path | None) -> int:
    if steps < 2:
        print("error: steps must be >= 2", file=sys.stderr)
        return 2
    band = BAND_NAMES[band_name]
    spec = cfg.numerics.quadrature
    solver = cfg.numerics.solver
    e = direction / np.linalg.norm(direction)
    rows = ["b_x,b_y,b_z,u_x,u_y,u_z,hess_min_eig,roundtrip_err"]
    for tval in np.linspace(0.0, b_max, steps):
        b = tval * e
        u = grad_f(cfg.material, band, b, spec)
        h = hess_f(cfg.material, band, b, spec)
        eig = float(np.linalg.eigvalsh(h)[0])
        try:
            mult = solve_multipliers(cfg.material, band, BandMoments(n=1.0, u=u),
                                     cfg=solver, spec=spec)
            err = float(np.max(np.abs(mult.b - b)))
        except NoConvergence as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        rows.append(",".join(_fmt(v) for v in (*b, *u, eig, err)))
    text = "\n".join(rows) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        out_path.write_text(text, encoding="ascii", newline="\n")
    return 0


def cmd_run(cfg: RunConfig, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    state = initial_state(cfg)
    try:
        snaps, reports = run(state, cfg.material, cfg.numerics,
                             t_end=cfg.output.t_end,
                             snapshot_every=cfg.output.snapshot_every,
                             potential=cfg.potential, coupling=cfg.coupling)
    except (NoConvergence, PositivityLost) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for k, snap in enumerate(snaps):
        write_snapshot(out_dir / f"snap_{k:06d}.csv", snap, cfg)

    def totals(s: SimState):
        dx = s.grid.dx
        mom = (s.mom_plus + s.mom_minus).sum(axis=0) * dx
        return (s.n_plus.sum() * dx, s.n_minus.sum() * dx, *mom)
    first, last = totals(snaps[0]), totals(snaps[-1])
    names = ("mass_plus", "mass_minus", "momentum_x", "momentum_y", "momentum_z")
    lines = [f"steps: {len(reports)}", f"t_final: {_fmt(snaps[-1].t)}",
             f"snapshots: {len(snaps)}"]
    for name, a, b in zip(names, first, last):
        lines += [f"initial {name}: {_fmt(a)}", f"final {name}: {_fmt(b)}",
                  f"delta {name}: {_fmt(b - a)}"]
    (out_dir / "report.txt").write_text("\n".join(lines) + "\n",
                                        encoding="ascii", newline="\n")
    return 0


def _parse_vector(text: str, name: str) -> np.ndarray:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name} must be comma-separated floats") from None
    if len(vals) != 3:
        raise argparse.ArgumentTypeError(f"{name} must have 3 components")
    return np.array(vals)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kane-hydro",
                                     description="Two-band moment-closure hydrodynamics")
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("closure", help="solve the multiplier constraints for one state")
    pc.add_argument("--config", required=True)
    pc.add_argument("--n", type=float, required=True)
    pc.add_argument("--u", type=lambda s: _parse_vector(s, "--u"), required=True)
    pc.add_argument("--band", choices=sorted(BAND_NAMES), default="plus")

    ps = sub.add_parser("sweep", help="tabulate the multiplier-to-velocity map along a ray")
    ps.add_argument("--config", required=True)
    ps.add_argument("--band", choices=sorted(BAND_NAMES), default="plus")
    ps.add_argument("--b-max", type=float, required=True)
    ps.add_argument("--steps", type=int, required=True)
    ps.add_argument("--direction", type=lambda s: _parse_vector(s, "--direction"),
                    default=np.array([1.0, 0.0, 0.0]))
    ps.add_argument("--out", default=None)

    pr = sub.add_parser("run", help="time-dependent simulation")
    pr.add_argument("--config", required=True)
    pr.add_argument("--out", default=None, help="override output.out_dir")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(Path(args.config).read_text())
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "closure":
        return cmd_closure(cfg, args.n, args.u, args.band)
    if args.command == "sweep":
        out = None if args.out is None else Path(args.out)
        return cmd_sweep(cfg, args.band, args.b_max, args.steps, args.direction, out)
    out_dir = Path(args.out) if args.out is not None else Path(cfg.output.out_dir)
    return cmd_run(cfg, out_dir)


if __name__ == "__main__":
    sys.exit(main())
