"""
Surface tension, free energy and the coexistence boundary.

Inside the pure phase sigma is an average over the fundamental domain of
B-function terms evaluated at the conformal data (w_i, z_j) of the unique u
with slope (s, t). On the boundary of the slope triangle sigma is piecewise
linear and comes from frozen periodic configurations; in the small-r
coexistence region it vanishes. The free energy is its Legendre dual.
"""

import logging
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy.optimize import minimize

from .config import FD_STEP, HESSIAN_STEP, PHASE_TIE_TOLERANCE, BOUNDARY_ANGLE_TOLERANCE
from .conformal import (
    _ETA_CLIP,
    _RHO_CLIP,
    _bfunc_masked,
    _chart,
    _inversion_grid,
    _wirtinger,
    coexistence_point,
    fields_from_u,
    in_coexistence,
    in_pure_phase,
    slopes_from_u,
    u_from_fields,
    u_from_slopes,
    w_of,
    z_of,
)
from .errors import DomainError, InvalidArgumentError, RegimeError, StencilError
from .models import FieldPoint, FundamentalDomain, Phase, SlopePoint
from .special_functions import bfunc

logger = logging.getLogger(__name__)

_TRIANGLE_TOL = 1e-12
_RETRY_STARTS = 64


# =============================================================================
# Interior closed forms
# =============================================================================

def sigma_from_u(u, domain: FundamentalDomain):
    """
    Surface tension at the slope of u, averaged over all (i, j) of the domain.

    Vectorized over arrays of u. Returns (sigma, s, t).
    """
    u = np.asarray(u, dtype=complex)
    s, t = slopes_from_u(u, domain)
    w = w_of(u, domain)[..., :, None]
    z = z_of(u, domain)[..., None, :]
    s_ = np.asarray(s)[..., None, None]
    t_ = np.asarray(t)[..., None, None]

    b_w = _bfunc_masked(w)
    b_q = _bfunc_masked((1.0 - w) / z)
    b_p = _bfunc_masked((z + w - 1.0) / w)
    if domain.is_small_r:
        terms = (1 - s_ - t_) * b_w + (1 - s_) * b_q + s_ * b_p
    else:
        log_w = np.log(np.abs(w * (1.0 - w)))
        terms = (1 - s_ - t_) * (log_w - b_w) - (1 - s_) * b_q - s_ * b_p
    return terms.mean(axis=(-2, -1)), s, t


def free_energy_conformal(u: complex, domain: FundamentalDomain) -> Tuple[FieldPoint, float]:
    """
    Fields and free energy at u: F = -sigma + s X + t Y.

    Raises:
        DomainError: If Im u <= 0.
    """
    u = complex(u)
    if u.imag <= 0 or not np.isfinite(u):
        raise DomainError(f"u must lie in the open upper half-plane, got {u!r}")
    sigma, s, t = sigma_from_u(u, domain)
    X, Y = fields_from_u(u, domain)
    F = -float(sigma) + float(s) * float(X) + float(t) * float(Y)
    return FieldPoint(float(X), float(Y)), F


# =============================================================================
# Simply periodic oracles (m1 = m2 = 1), written in terms of w
# =============================================================================

def simple_surface_tension_small_r(w: complex, r: float) -> Tuple[float, float, float]:
    """(s, t, sigma) for a single weight r < 1, parameterized by w in the upper half-plane."""
    k = 1.0 - r * r
    z = (1.0 - w) / (1.0 - k * w)
    theta = np.angle(w / (1.0 - w))
    s = np.angle(w) / theta
    t = np.angle(z) / np.angle(z / (1.0 - z))
    sigma = ((1 - s - t) * bfunc(w) + (1 - s) * bfunc(1.0 - k * w)
             + s * bfunc(k * (1.0 - w) / (1.0 - k * w)))
    return float(s), float(t), float(sigma)


def simple_free_energy_large_r(w: complex, r: float) -> Tuple[float, float, float]:
    """(s, t, F) for a single weight r > 1, parameterized by w in the upper half-plane."""
    k = 1.0 - r * r
    z = (1.0 - w) / (1.0 - k * w)
    theta = 2.0 * np.pi - np.angle(w / (1.0 - w))
    s = (np.pi - np.angle(w)) / theta
    t = (np.pi + np.angle(z)) / theta
    F = ((1 - s) * (bfunc(w) - np.log(abs(w * (1.0 - w))))
         + (1 - s) * bfunc((1.0 - w) / z)
         + s * bfunc((z + w - 1.0) / w)
         - s * (bfunc(z) + np.log(abs(z * (1.0 - z)))))
    return float(s), float(t), float(F)


# =============================================================================
# Boundary of the slope triangle
# =============================================================================

def column_costs(domain: FundamentalDomain) -> np.ndarray:
    """-(1/m2) sum_j log|1 - alpha_x^2 beta_j^2| for each column x."""
    return -np.log(np.abs(1.0 - domain.products ** 2)).mean(axis=1)


def row_costs(domain: FundamentalDomain) -> np.ndarray:
    """-(1/m1) sum_i log|1 - alpha_i^2 beta_y^2| for each row y."""
    return -np.log(np.abs(1.0 - domain.products ** 2)).mean(axis=0)


def _edge_profile(costs: np.ndarray) -> np.ndarray:
    """sigma at k/m, k = 0..m: the m - k cheapest lines stay empty."""
    ordered = np.sort(costs)
    m = len(costs)
    return np.array([ordered[:m - k].sum() / m for k in range(m + 1)])


def surface_tension_boundary(s: float, t: float, domain: FundamentalDomain) -> float:
    """
    Exact sigma on the boundary of the slope triangle.

    Along t = 0 it interpolates linearly between the frozen column patterns
    at s = k/m1; along s = 0 likewise with rows. On s + t = 1 it is 0 for
    small r and the tent through the zig-zag value -mean log r at (1/2, 1/2)
    for large r.

    Raises:
        DomainError: If (s, t) is not on the boundary.
    """
    if abs(t) <= _TRIANGLE_TOL:
        nodes = np.linspace(0.0, 1.0, domain.m1 + 1)
        return float(np.interp(s, nodes, _edge_profile(column_costs(domain))))
    if abs(s) <= _TRIANGLE_TOL:
        nodes = np.linspace(0.0, 1.0, domain.m2 + 1)
        return float(np.interp(t, nodes, _edge_profile(row_costs(domain))))
    if abs(s + t - 1.0) <= _TRIANGLE_TOL:
        if domain.is_small_r:
            return 0.0
        zigzag = -np.log(domain.products).mean()
        return float(np.interp(s, [0.0, 0.5, 1.0], [0.0, zigzag, 0.0]))
    raise DomainError(f"({s}, {t}) is not on the boundary of the slope triangle")


def frozen_candidates(domain: FundamentalDomain) -> List[SlopePoint]:
    """Slopes at which a frozen or semi-frozen phase can sit."""
    points = {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)}
    points.update((i / domain.m1, 0.0) for i in range(1, domain.m1))
    points.update((0.0, j / domain.m2) for j in range(1, domain.m2))
    if not domain.is_small_r:
        points.add((0.5, 0.5))
    return [SlopePoint(s, t) for s, t in sorted(points)]


def boundary_kinks(domain: FundamentalDomain, tol: float = 1e-12) -> List[SlopePoint]:
    """Points of the two axis edges where sigma actually changes slope."""
    kinks = []
    for costs, make in ((column_costs(domain), lambda v: SlopePoint(v, 0.0)),
                        (row_costs(domain), lambda v: SlopePoint(0.0, v))):
        m = len(costs)
        profile = _edge_profile(costs)
        slopes = np.diff(profile) * m
        for k in range(1, m):
            if abs(slopes[k] - slopes[k - 1]) > tol:
                kinks.append(make(k / m))
    return kinks


# =============================================================================
# Surface tension and free energy
# =============================================================================

def surface_tension(p: SlopePoint, domain: FundamentalDomain) -> float:
    """
    Surface tension sigma(s, t).

    Args:
        p: Slope in the closed triangle.
        domain: Fundamental domain.

    Returns:
        0 in the small-r coexistence region, the exact piecewise-linear value
        on the triangle boundary, the conformal double sum otherwise.

    Raises:
        DomainError: If p lies outside the triangle.
    """
    s, t = float(p.s), float(p.t)
    if not p.in_triangle(_TRIANGLE_TOL):
        raise DomainError(f"slope ({s}, {t}) outside the triangle")
    if (abs(s) <= _TRIANGLE_TOL or abs(t) <= _TRIANGLE_TOL
            or abs(s + t - 1.0) <= _TRIANGLE_TOL):
        return surface_tension_boundary(s, t, domain)
    if domain.is_small_r and in_coexistence(s, t, domain):
        return 0.0
    u = u_from_slopes(s, t, domain)
    sigma, _, _ = sigma_from_u(u, domain)
    return float(sigma)


@lru_cache(maxsize=32)
def _scan_grid(domain: FundamentalDomain):
    """sigma, s and t on the cached inversion grid; read-only once built."""
    rho, eta, s, t, _, _ = _inversion_grid(domain)
    u, _ = _chart(rho, eta)
    with np.errstate(all="ignore"):
        sigma, _, _ = sigma_from_u(u, domain)
    sigma = np.where(np.isfinite(sigma), sigma, np.nan)
    sigma.setflags(write=False)
    return rho, eta, sigma, s, t


def _interior_maximizer(X: float, Y: float, domain: FundamentalDomain):
    """
    Largest value of -sigma + s X + t Y over the open half-plane in u.

    A grid scan followed by Nelder-Mead in the (rho, eta) chart. Returns the
    chart point and the value, which is a lower bound of the interior sup.
    """
    rho, eta, sigma, s, t = _scan_grid(domain)
    values = -sigma + s * X + t * Y
    k = int(np.nanargmax(values))

    def objective(v):
        u, _ = _chart(np.clip(v[0], -_RHO_CLIP, _RHO_CLIP), np.clip(v[1], -_ETA_CLIP, _ETA_CLIP))
        with np.errstate(all="ignore"):
            sig, ss, tt = sigma_from_u(u, domain)
        value = -float(sig) + float(ss) * X + float(tt) * Y
        return -value if np.isfinite(value) else np.inf

    res = minimize(objective, [rho[k], eta[k]], method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 4000})
    if np.isfinite(res.fun) and -res.fun >= values[k]:
        x = (float(np.clip(res.x[0], -_RHO_CLIP, _RHO_CLIP)),
             float(np.clip(res.x[1], -_ETA_CLIP, _ETA_CLIP)))
        return x, float(-res.fun)
    return (float(rho[k]), float(eta[k])), float(values[k])


def free_energy_search(fields: FieldPoint, domain: FundamentalDomain):
    """
    Locate the Legendre maximizer of -sigma + s X + t Y.

    The frozen branch is taken only after an interior scan confirms that no
    point of the half-plane beats the best frozen candidate.

    Returns:
        (phase, slope, F, u, tied) where u is the conformal preimage for the
        disordered phase and tied lists frozen candidates sharing the maximum.
    """
    X, Y = float(fields.X), float(fields.Y)
    if not (np.isfinite(X) and np.isfinite(Y)):
        raise InvalidArgumentError(f"fields must be finite, got ({X}, {Y})")

    candidates = frozen_candidates(domain)
    values = np.array([
        -surface_tension_boundary(c.s, c.t, domain) + c.s * X + c.t * Y for c in candidates
    ])

    best = float(values.max())
    gap = PHASE_TIE_TOLERANCE * max(1.0, abs(best))

    u = u_from_fields(X, Y, domain)
    F = None
    if u is None:
        # A missed root must not fall through to the frozen branch
        start, interior = _interior_maximizer(X, Y, domain)
        if interior > best + gap:
            u = u_from_fields(X, Y, domain, starts=_RETRY_STARTS, extra_starts=[start])
            if u is None:
                logger.warning("fields (%g, %g): no preimage converged, using the interior maximizer",
                               X, Y)
                u, _ = _chart(*start)
                u, F = complex(u), interior
    if u is not None:
        if F is None:
            _, F = free_energy_conformal(u, domain)
        s, t = slopes_from_u(u, domain)
        phi = np.angle(u)
        near_edge = phi < BOUNDARY_ANGLE_TOLERANCE or np.pi - phi < BOUNDARY_ANGLE_TOLERANCE
        phase = Phase.BOUNDARY if near_edge else Phase.DISORDERED
        return phase, SlopePoint(float(s), float(t)), F, u, []

    tied = [c for c, v in zip(candidates, values) if best - v <= gap]
    phase = Phase.BOUNDARY if len(tied) > 1 else Phase.FROZEN
    return phase, tied[0], best, None, tied if len(tied) > 1 else []


def free_energy(fields: FieldPoint, domain: FundamentalDomain) -> float:
    """
    Free energy F(X, Y) = sup over slopes of (-sigma + s X + t Y).

    Inside the amoeba the supremum is attained at the slope of the unique u
    with fields (X, Y); outside it at one of the frozen candidate slopes.
    """
    return free_energy_search(fields, domain)[2]


def legendre_free_energy(fields: FieldPoint, domain: FundamentalDomain, n: int = 200) -> float:
    """Brute-force Legendre supremum over an n x n grid in u plus the frozen candidates."""
    rho, eta = np.meshgrid(np.linspace(-12, 12, n), np.linspace(-12, 12, n), indexing="ij")
    u, _ = _chart(rho, eta)
    sigma, s, t = sigma_from_u(u, domain)
    interior = np.nanmax(-sigma + s * fields.X + t * fields.Y)
    frozen = max(-surface_tension_boundary(c.s, c.t, domain) + c.s * fields.X + c.t * fields.Y
                 for c in frozen_candidates(domain))
    return float(max(interior, frozen))


# =============================================================================
# Coexistence and Hessian
# =============================================================================

def coexistence_boundary(domain: FundamentalDomain, R: float) -> SlopePoint:
    """
    Point of the small-r coexistence curve with parameter R > 0.

    s(R) = (1/m1) sum alpha_i^2 / (R + alpha_i^2),
    t(R) = (1/m2) sum beta_j^2 R / (1 + beta_j^2 R).

    Raises:
        RegimeError: For large-r domains, which have no coexistence phase.
        InvalidArgumentError: If R is not a positive finite number.
    """
    if not domain.is_small_r:
        raise RegimeError("large-r domains have no coexistence phase")
    if not (np.isfinite(R) and R > 0):
        raise InvalidArgumentError(f"R must be positive and finite, got {R!r}")
    s, t = coexistence_point(R, domain)
    return SlopePoint(float(s), float(t))


def hessian_matrix(s: float, t: float, domain: FundamentalDomain,
                   step: float = HESSIAN_STEP) -> np.ndarray:
    """
    Hessian of sigma at (s, t) by second central differences.

    Raises:
        StencilError: If the stencil leaves the pure phase.
    """
    if not in_pure_phase(s, t, domain, margin=2 * step):
        raise StencilError(f"stencil of size {step:g} at ({s:.6g}, {t:.6g}) leaves the pure phase")

    def sig(ds, dt):
        return surface_tension(SlopePoint(s + ds * step, t + dt * step), domain)

    center = sig(0, 0)
    h2 = step * step
    ss = (sig(1, 0) - 2 * center + sig(-1, 0)) / h2
    tt = (sig(0, 1) - 2 * center + sig(0, -1)) / h2
    st = (sig(1, 1) - sig(1, -1) - sig(-1, 1) + sig(-1, -1)) / (4 * h2)
    return np.array([[ss, st], [st, tt]])


def hessian_identity(u: complex, domain: FundamentalDomain, step: float = HESSIAN_STEP) -> float:
    """
    Relative residual of sqrt(det H_sigma) = theta^2 / pi at the slope of u.

    Raises:
        StencilError: Near the edge of the pure phase.
    """
    s, t = slopes_from_u(u, domain)
    H = hessian_matrix(float(s), float(t), domain, step)
    theta = np.angle(u) if domain.is_small_r else 2 * np.pi - np.angle(u)
    target = theta ** 2 / np.pi
    det = np.linalg.det(H)
    if det <= 0:
        return float("inf")
    return float(abs(np.sqrt(det) - target) / target)


def intrinsic_metric(u: complex, domain: FundamentalDomain, step: float = HESSIAN_STEP) -> np.ndarray:
    """
    H_sigma pulled back to the u-plane: J^T H J with J = d(s, t)/d(Re u, Im u).

    In the conformal coordinate this is a multiple of the identity.
    """
    s, t = slopes_from_u(u, domain)
    H = hessian_matrix(float(s), float(t), domain, step)
    h = 1e-6 * max(1.0, abs(u))

    def st(v):
        return np.array(slopes_from_u(v, domain), dtype=float)

    J = np.column_stack([(st(u + h) - st(u - h)) / (2 * h),
                         (st(u + 1j * h) - st(u - 1j * h)) / (2 * h)])
    return J.T @ H @ J


def duality_residual(u: complex, domain: FundamentalDomain, step: float = FD_STEP) -> float:
    """
    Relative residual of d sigma = X ds + Y dt at the slope of u.

    sigma and (X, Y) are separate closed forms in u, so a nonzero residual
    means the fields are not the gradient of the surface tension. The
    derivatives are Wirtinger derivatives in u by central differences.

    Raises:
        DomainError: If u is not at least one stencil above the real axis.
    """
    u = complex(u)
    h = step * max(1.0, abs(u))
    if not np.isfinite(u) or u.imag <= h:
        raise DomainError(f"u = {u!r} too close to the real axis for step {h:g}")

    def f(v):
        sigma, s, t = sigma_from_u(v, domain)
        return [sigma, s, t]

    sigma_u, s_u, t_u = _wirtinger(f, u, h)
    X, Y = (float(v) for v in fields_from_u(u, domain))
    scale = max(abs(sigma_u), abs(X * s_u) + abs(Y * t_u), abs(s_u) + abs(t_u))
    return float(abs(sigma_u - X * s_u - Y * t_u) / scale)
