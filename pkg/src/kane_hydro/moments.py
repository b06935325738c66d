"""Momentum-space moments of the tilted equilibrium weight.

The weight is phi(A, B, p) = exp(-beta E(p) + B.v(p) + A).  For one band it
factorizes in a frame aligned with the coupling vector alpha: writing
s = (alpha.p)/|alpha| and p_perp for the transverse part,

    -beta E + B.v = [-beta s^2/2m -/+ beta R(s) + b_par v_par(s)]
                    + [-beta |p_perp|^2/2m + B_perp.p_perp/m],

with R(s) = sqrt(|alpha|^2 s^2 + gamma^2) and v_par(s) = s/m +/- nu2(s)|alpha|.
The transverse factor is an exact 2D Gaussian with mean B_perp/beta and
covariance (m/beta) I, so transverse moments up to second order are analytic
and only a 1D integral over s remains (`reduced1d` backend).

The s-integrand is smooth except for the branch-point scale gamma/|alpha|
around s = 0, so the 1D rule is composite Gauss-Legendre on panels that start
at that scale and double away from the origin (capped at a few thermal
widths).  The `full3d` backend is the independent oracle: it rotates to the
same frame but integrates all three axes numerically (trapezoid on the
sinh-stretched band axis, Gauss-Hermite transversally) and evaluates the
integrand directly from the band kernels, with none of the expansion algebra
above.

All quadrature shifts exponents by their maximum over nodes; the shift is
re-applied analytically, never through the node sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureOverflow
from .material import Band, MaterialParams

BACKENDS = ("reduced1d", "full3d")

# Largest exponent allowed to reach exp(); beyond this the moments cannot be
# represented in float64 and the caller must rescale.
EXP_CAP = 700.0

# Window half-width around [0, s_peak] in thermal units, plus a slack term for
# the bounded exp(beta |alpha| |s|) tilt of the lower band.
_WINDOW_SIGMAS = 20.0
_PANEL_CAP_SIGMAS = 6.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature backend selection and resolution knobs.

    nodes_1d is the Gauss-Legendre order per panel of the band-axis rule;
    nodes_3d_per_axis is the transverse Gauss-Hermite order of the full3d
    oracle (its band-axis node count is set automatically from the peak
    geometry).
    """

    backend: str = "reduced1d"
    nodes_1d: int = 64
    nodes_3d_per_axis: int = 32

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.nodes_1d < 8 or self.nodes_3d_per_axis < 8:
            raise ValueError("quadrature node counts must be >= 8")


@dataclass(frozen=True, eq=False)
class MomentSet:
    """Moments of phi over momentum space: mass, velocity, v x v, and the
    averaged inverse effective-mass tensor."""

    m0: float
    m1: np.ndarray
    m2: np.ndarray
    q: np.ndarray


@dataclass(frozen=True, eq=False)
class NormalizedMoments:
    """Scale-free A=0 moments: log of the mass moment plus mass-normalized
    first and second moments.  Safe for arbitrarily large |B|."""

    log_m0: np.ndarray
    u: np.ndarray
    m2n: np.ndarray
    qn: np.ndarray


@lru_cache(maxsize=32)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=32)
def _hermgauss(n: int):
    return np.polynomial.hermite.hermgauss(n)


def band_frame(alpha: np.ndarray):
    """(|alpha|, unit vector along alpha), or (0, None) for parabolic bands."""
    a = float(np.linalg.norm(alpha))
    if a == 0.0:
        return 0.0, None
    return a, alpha / a


def _transverse_frame(e1: np.ndarray):
    """Deterministic orthonormal completion of e1."""
    k = int(np.argmin(np.abs(e1)))
    v = np.zeros(3)
    v[k] = 1.0
    e2 = v - (v @ e1) * e1
    e2 /= np.linalg.norm(e2)
    e3 = np.cross(e1, e2)
    return e2, e3


def _panel_edges(s_lo: float, s_hi: float, delta: float, cap: float) -> np.ndarray:
    """Panel edges on [s_lo, s_hi] (which straddles 0): widths start at the
    branch-point scale delta and double outward, capped at `cap`."""
    out = [0.0]
    w = min(delta, cap)
    while out[-1] < s_hi:
        out.append(min(out[-1] + w, s_hi))
        w = min(2.0 * w, cap)
    w = min(delta, cap)
    lo_side = [0.0]
    while lo_side[-1] > s_lo:
        lo_side.append(max(lo_side[-1] - w, s_lo))
        w = min(2.0 * w, cap)
    return np.array(sorted(set(out + lo_side[1:])))


def band_axis_grid(params: MaterialParams, a: float, s_lo_center: float,
                   s_hi_center: float, nodes: int):
    """Composite Gauss-Legendre nodes/weights covering every peak position in
    [s_lo_center, s_hi_center] with a shared window."""
    sigma = np.sqrt(params.mass / params.beta)
    margin = _WINDOW_SIGMAS * sigma + 2.0 * a * params.mass / params.beta
    s_lo = min(0.0, s_lo_center) - margin
    s_hi = max(0.0, s_hi_center) + margin
    edges = _panel_edges(s_lo, s_hi, params.gamma / a, _PANEL_CAP_SIGMAS * sigma)
    xg, wg = _leggauss(nodes)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    s = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    w = (half[:, None] * wg[None, :]).ravel()
    return s, w


def _gaussian_raw(params: MaterialParams, band: Band, B: np.ndarray) -> NormalizedMoments:
    """Closed form for alpha = 0: pure Gaussian in p with a constant band
    offset -/+ beta gamma."""
    m, beta = params.mass, params.beta
    B = np.asarray(B, dtype=float)
    u = B / (m * beta)
    log_m0 = 1.5 * np.log(2.0 * np.pi * m / beta) - band.sign * beta * params.gamma \
        + B @ B / (2.0 * m * beta)
    m2n = np.eye(3) / (m * beta) + np.outer(u, u)
    qn = np.eye(3) / m
    return NormalizedMoments(np.float64(log_m0), u, m2n, qn)


def _reduced_raw_batch(params: MaterialParams, band: Band, B: np.ndarray,
                       spec: QuadratureSpec) -> NormalizedMoments:
    """reduced1d backend over a batch of multiplier vectors B with shape (C, 3)."""
    m, beta, gamma = params.mass, params.beta, params.gamma
    sgn = band.sign
    a, e1 = band_frame(params.alpha)
    C = B.shape[0]
    if a == 0.0:
        u = B / (m * beta)
        log_m0 = 1.5 * np.log(2.0 * np.pi * m / beta) - sgn * beta * gamma \
            + (B * B).sum(axis=1) / (2.0 * m * beta)
        m2n = np.eye(3) / (m * beta) + u[:, :, None] * u[:, None, :]
        qn = np.broadcast_to(np.eye(3) / m, (C, 3, 3)).copy()
        return NormalizedMoments(log_m0, u, m2n, qn)

    b_par = B @ e1                       # (C,)
    b_perp = B - b_par[:, None] * e1     # (C, 3)
    u_perp = b_perp / (m * beta)

    s_star = b_par / beta
    s, w = band_axis_grid(params, a, float(s_star.min()), float(s_star.max()),
                          spec.nodes_1d)
    R = np.sqrt(a * a * s * s + gamma * gamma)
    nu2 = a * s / R
    vpar = s / m + sgn * a * nu2
    kappa = gamma * gamma / R**3
    # exponent = c0(s) + b_par * v_par(s): the b_par-linear part is exactly the
    # parallel velocity, so one node table serves the whole batch.
    c0 = -beta * s * s / (2.0 * m) - sgn * beta * R
    g = c0[None, :] + b_par[:, None] * vpar[None, :]
    shift = g.max(axis=1)
    ew = w[None, :] * np.exp(g - shift[:, None])

    t0 = ew.sum(axis=1)
    tv = ew @ vpar
    tvv = ew @ (vpar * vpar)
    tq = ew @ kappa

    log_m0 = np.log(2.0 * np.pi * m / beta) + (b_perp * b_perp).sum(axis=1) / (2.0 * m * beta) \
        + shift + np.log(t0)
    uv = tv / t0
    u = uv[:, None] * e1 + u_perp

    # v x v expands blockwise: parallel block from the s-moments, cross block
    # as v_par times the Gaussian transverse mean, transverse block as the
    # exact Gaussian second moment I_perp/(m beta) + u_perp x u_perp.
    e11 = np.outer(e1, e1)
    perp_eye = np.eye(3) - e11
    cross = e1[:, None] * u_perp[:, None, :] + u_perp[:, :, None] * e1[None, :]
    m2n = (tvv / t0)[:, None, None] * e11 \
        + uv[:, None, None] * cross \
        + perp_eye / (m * beta) \
        + u_perp[:, :, None] * u_perp[:, None, :]

    # inverse mass depends on p only through s: I/m +/- a^2 <kappa> e1 x e1.
    qn = np.eye(3) / m + sgn * (a * a) * (tq / t0)[:, None, None] * e11
    return NormalizedMoments(log_m0, u, m2n, qn)


def _full3d_raw(params: MaterialParams, band: Band, B: np.ndarray,
                spec: QuadratureSpec) -> NormalizedMoments:
    """full3d oracle: direct tensor quadrature of the band kernels."""
    m, beta, gamma = params.mass, params.beta, params.gamma
    sgn = band.sign
    alpha = params.alpha
    a, e1 = band_frame(alpha)
    x, wh = _hermgauss(spec.nodes_3d_per_axis)
    log_wh = np.log(wh) + x * x
    sig = np.sqrt(2.0 * m / beta)

    sigma = np.sqrt(m / beta)
    reach = np.abs(B).max() / beta + _WINDOW_SIGMAS * sigma + 1.0
    if a == 0.0 or a * reach < 1e-9 * gamma:
        # Parabolic or near-parabolic: the gap branch points sit far outside
        # the populated region, so recentered Gauss-Hermite on all three axes
        # is (numerically) exact; the full integrand is still evaluated.
        c = B / beta
        p = np.stack(np.meshgrid(c[0] + sig * x, c[1] + sig * x, c[2] + sig * x,
                                 indexing="ij"), axis=-1)
        log_w = (log_wh[:, None, None] + log_wh[None, :, None]
                 + log_wh[None, None, :] + 3.0 * np.log(sig))
    else:
        e2, e3 = _transverse_frame(e1)
        s_star = (B @ e1) / beta
        delta = gamma / a
        margin = _WINDOW_SIGMAS * sigma + 2.0 * a * m / beta
        lo = min(0.0, s_star) - margin
        hi = max(0.0, s_star) + margin
        t_lo = np.arcsinh(lo / delta)
        t_hi = np.arcsinh(hi / delta)
        # Uniform trapezoid in t (s = delta sinh t): the integrand is entire in
        # t, so the rule is spectrally accurate once the narrowest feature --
        # the thermal peak at s_star -- is resolved.
        reach = abs(s_star) + 16.0 * sigma
        h = min(0.2, sigma / (4.0 * np.sqrt(delta * delta + reach * reach)))
        n_s = max(int(np.ceil((t_hi - t_lo) / h)) + 1, 4 * spec.nodes_3d_per_axis)
        t = np.linspace(t_lo, t_hi, n_s)
        s = delta * np.sinh(t)
        log_ws = np.log(delta * np.cosh(t) * (t[1] - t[0]))
        c2 = (B @ e2) / beta
        c3 = (B @ e3) / beta
        p = (s[:, None, None, None] * e1
             + (c2 + sig * x)[None, :, None, None] * e2
             + (c3 + sig * x)[None, None, :, None] * e3)
        log_w = (log_ws[:, None, None] + log_wh[None, :, None]
                 + log_wh[None, None, :] + 2.0 * np.log(sig))

    ap = p @ alpha
    R = np.sqrt(ap * ap + gamma * gamma)
    energy = (p * p).sum(axis=-1) / (2.0 * m) + sgn * R
    v = p / m + sgn * (ap / R)[..., None] * alpha
    g = -beta * energy + v @ B + log_w
    shift = g.max()
    ew = np.exp(g - shift)

    t0 = ew.sum()
    m1 = np.einsum("ijk,ijkl->l", ew, v) / t0
    m2n = np.einsum("ijk,ijkl,ijkm->lm", ew, v, v) / t0
    qn = np.eye(3) / m
    if a > 0.0:
        mean_kappa = float((ew * (gamma * gamma / R**3)).sum() / t0)
        qn = qn + sgn * mean_kappa * np.outer(alpha, alpha)
    return NormalizedMoments(np.float64(shift + np.log(t0)), m1, m2n, qn)


def raw_moments(params: MaterialParams, band: Band, B: np.ndarray,
                spec: QuadratureSpec) -> NormalizedMoments:
    """A=0 moments of phi in scale-free form for a single multiplier vector."""
    B = np.asarray(B, dtype=float)
    if spec.backend == "full3d":
        return _full3d_raw(params, band, B, spec)
    if params.alpha_norm == 0.0:
        return _gaussian_raw(params, band, B)
    out = _reduced_raw_batch(params, band, B[None, :], spec)
    return NormalizedMoments(out.log_m0[0], out.u[0], out.m2n[0], out.qn[0])


def raw_moments_batch(params: MaterialParams, band: Band, B: np.ndarray,
                      spec: QuadratureSpec) -> NormalizedMoments:
    """Batched raw moments over B with shape (C, 3); reduced1d vectorizes over
    the batch with a shared node table, full3d loops (oracle use only)."""
    B = np.asarray(B, dtype=float)
    if spec.backend == "reduced1d":
        return _reduced_raw_batch(params, band, B, spec)
    rows = [_full3d_raw(params, band, b, spec) for b in B]
    return NormalizedMoments(
        np.array([r.log_m0 for r in rows]),
        np.array([r.u for r in rows]),
        np.array([r.m2n for r in rows]),
        np.array([r.qn for r in rows]),
    )


def integrate_moments(params: MaterialParams, band: Band, A: float,
                      B: np.ndarray, spec: QuadratureSpec) -> MomentSet:
    """All four moments of phi(A, B, p).  The A-dependence is factored
    analytically, so scaling in A is exact up to one exp rounding."""
    raw = raw_moments(params, band, np.asarray(B, dtype=float), spec)
    scale_log = A + float(raw.log_m0)
    if scale_log > EXP_CAP:
        raise QuadratureOverflow(
            f"moment scale exp({scale_log:.1f}) exceeds cap exp({EXP_CAP:.0f}); "
            "work at A=0 and rescale")
    c = np.exp(scale_log)
    return MomentSet(m0=c, m1=c * raw.u, m2=c * raw.m2n, q=c * raw.qn)


def partition_z(params: MaterialParams, band: Band,
                spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Partition integral of exp(-beta E) over momentum space."""
    return integrate_moments(params, band, 0.0, np.zeros(3), spec).m0
