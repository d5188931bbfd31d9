"""
Limit shapes as envelopes of tangent planes.

In the conformal coordinate u the tangent plane at a liquid point is
x3 = s(u) x + t(u) y + G(u)/theta(u) with G harmonic. Taking the holomorphic
u-derivative of the plane equation gives a complex linear equation for (x, y);
its real and imaginary parts are solved here point by point.

Built-in boundary data cover the two semi-boxed plane partition shapes:

- semi_boxed_large_r: region {x > 0, y > 0, |x - y| < 1}; G = -pi on u > 0
  and 0 on u < 0.
- semi_boxed_small_r: region {x < 1, y > 0, x - y < 1}; G = pi on
  [a, -alpha_max^2], pi/2 on [-alpha_max^2, -alpha_min^2] and 0 elsewhere.
"""

import logging
from typing import List, Optional, Sequence

import numpy as np
from scipy.interpolate import griddata

from .config import ENVELOPE_DEGENERACY, TANGENCY_OFFSET
from .conformal import slopes_from_u, theta_of
from .errors import CriticalPointError, DomainError, ParameterError, RegimeError
from .models import (
    EnvelopePoint,
    FrozenBoundary,
    FundamentalDomain,
    HarmonicBoundaryData,
    MeshFlag,
    Regime,
    Region,
    TangencyPoint,
)
from .phase_diagram import real_axis_cover

logger = logging.getLogger(__name__)

BUILTIN_EXAMPLES = ("semi_boxed_large_r", "semi_boxed_small_r")


# =============================================================================
# Boundary data
# =============================================================================

def small_r_parameter_interval(domain: FundamentalDomain):
    """Open interval of admissible a for the small-r semi-boxed shape."""
    return -1.0 / float(domain.beta_array.min()) ** 2, -float(domain.alpha_array.max()) ** 2


def builtin_G(name: str, domain: FundamentalDomain, a: Optional[float] = None) -> HarmonicBoundaryData:
    """
    Step data for one of the built-in semi-boxed examples.

    Args:
        name: semi_boxed_large_r or semi_boxed_small_r.
        domain: Fundamental domain; its regime must match the example.
        a: Point at infinity of the small-r shape. Defaults to the geometric
            mean of the interval ends.

    Raises:
        ParameterError: Unknown name or a outside its interval.
        RegimeError: Example and domain regimes differ.
    """
    if name == "semi_boxed_large_r":
        if domain.is_small_r:
            raise RegimeError("semi_boxed_large_r needs a large-r domain")
        return HarmonicBoundaryData(left_value=0.0, breakpoints=(0.0,), values=(-np.pi,), name=name)

    if name == "semi_boxed_small_r":
        if not domain.is_small_r:
            raise RegimeError("semi_boxed_small_r needs a small-r domain")
        lo, hi = small_r_parameter_interval(domain)
        if a is None:
            a = -float(np.sqrt(lo * hi))
        if not (lo < a < hi):
            raise ParameterError(f"a must lie in ({lo:g}, {hi:g}), got {a}")
        # descend by pi/m1 at each -alpha_i^2 so that x = 1 at every tangency
        levels, counts = np.unique(domain.alpha_array ** 2, return_counts=True)
        breaks, values, remaining = [float(a)], [np.pi], np.pi
        for a2, c in zip(levels[::-1], counts[::-1]):
            remaining -= np.pi * c / domain.m1
            breaks.append(-float(a2))
            values.append(max(remaining, 0.0))
        values[-1] = 0.0
        return HarmonicBoundaryData(left_value=0.0, breakpoints=tuple(breaks), values=tuple(values), name=name)

    raise ParameterError(f"unknown example {name!r}; choose one of {', '.join(BUILTIN_EXAMPLES)}")


def harmonic_value(G: HarmonicBoundaryData, u: complex) -> float:
    """Harmonic extension of G at u in the upper half-plane."""
    if complex(u).imag <= 0:
        raise DomainError(f"u must lie in the open upper half-plane, got {u!r}")
    return G.value(u)


def harmonic_derivative(G: HarmonicBoundaryData, u: complex) -> complex:
    """Holomorphic derivative G_u."""
    if complex(u).imag <= 0:
        raise DomainError(f"u must lie in the open upper half-plane, got {u!r}")
    return G.derivative(u)


# =============================================================================
# Holomorphic derivatives
# =============================================================================

def holomorphic_derivatives(u: complex, domain: FundamentalDomain):
    """
    Exact u-derivatives ((s theta)_u, (t theta)_u, theta_u).

    Large r flips the sign of all three.
    """
    u = complex(u)
    a2 = domain.alpha_array ** 2
    b2 = domain.beta_array ** 2
    st_u = np.mean(1.0 / u - 1.0 / (u + a2)) / 2j
    tt_u = np.mean(b2 / (1.0 + b2 * u)) / 2j
    th_u = 1.0 / (2j * u)
    if domain.regime is Regime.LARGE_R:
        return -st_u, -tt_u, -th_u
    return st_u, tt_u, th_u


def envelope_point(u: complex, G: HarmonicBoundaryData, domain: FundamentalDomain) -> EnvelopePoint:
    """
    Point (x, y, h) of the limit shape whose tangent plane is labelled by u.

    The system theta*(s_u x + t_u y + (G/theta)_u) = 0 is solved in the
    theta-scaled form, which stays finite where theta -> 0.

    Raises:
        DomainError: If Im u <= 0.
        CriticalPointError: If the 2x2 system is degenerate at u.
    """
    u = complex(u)
    if not np.isfinite(u) or u.imag <= 0:
        raise DomainError(f"u must lie in the open upper half-plane, got {u!r}")

    s, t = (float(v) for v in slopes_from_u(u, domain))
    theta = float(theta_of(u, domain))
    g = G.value(u)
    st_u, tt_u, th_u = holomorphic_derivatives(u, domain)

    A = st_u - s * th_u
    B = tt_u - t * th_u
    C = G.derivative(u) - (g / theta) * th_u

    det = A.real * B.imag - A.imag * B.real
    scale = abs(A) * abs(B)
    if not np.isfinite(det) or abs(det) <= ENVELOPE_DEGENERACY * scale:
        raise CriticalPointError(f"degenerate envelope system at u={u!r} (det={det:.3g})")

    x = (-C.real * B.imag + C.imag * B.real) / det
    y = (-A.real * C.imag + A.imag * C.real) / det
    h = s * x + t * y + g / theta
    return EnvelopePoint(u=u, x=float(x), y=float(y), h=float(h), s=s, t=t, theta=theta)


# =============================================================================
# Meshes and frozen boundary
# =============================================================================

def polar_grid(n_radius: int = 60, n_angle: int = 60, r_min: float = 1e-3, r_max: float = 1e3,
               angle_margin: float = 1e-3) -> np.ndarray:
    """Points u = R e^{i phi} with geometric R and uniform phi in (0, pi)."""
    R = np.geomspace(r_min, r_max, n_radius)
    phi = np.linspace(angle_margin, np.pi - angle_margin, n_angle)
    return (R[:, None] * np.exp(1j * phi[None, :])).ravel()


def limit_shape_mesh(G: HarmonicBoundaryData, domain: FundamentalDomain,
                     points: Optional[Sequence[complex]] = None) -> List[EnvelopePoint]:
    """
    Evaluate envelope_point over a set of u values.

    Degenerate points are kept with NaN coordinates and MeshFlag.DEGENERATE.
    """
    if points is None:
        points = polar_grid()
    mesh = []
    n_bad = 0
    for u in points:
        try:
            mesh.append(envelope_point(u, G, domain))
        except CriticalPointError:
            n_bad += 1
            nan = float("nan")
            mesh.append(EnvelopePoint(u=complex(u), x=nan, y=nan, h=nan, s=nan, t=nan,
                                      theta=nan, flag=MeshFlag.DEGENERATE))
    logger.info("limit shape mesh: %d points, %d degenerate", len(mesh), n_bad)
    return mesh


def _singular_points(G: HarmonicBoundaryData, domain: FundamentalDomain) -> np.ndarray:
    pts = np.concatenate([np.asarray(G.breakpoints, dtype=float),
                          -domain.alpha_array ** 2, -1.0 / domain.beta_array ** 2, [0.0]])
    return np.unique(pts)


def frozen_boundary(G: HarmonicBoundaryData, domain: FundamentalDomain, n_samples: int = 2000,
                    epsilon: float = 1e-7, cap: float = 50.0) -> FrozenBoundary:
    """
    Boundary of the liquid region as the image of u = x0 + i*eps.

    Samples within 10*eps (relative) of a breakpoint of G or of the weights,
    degenerate samples, and samples beyond the cap become gaps.
    """
    x0 = real_axis_cover(domain, n_samples)
    bps = _singular_points(G, domain)
    points: List[Optional[tuple]] = []
    u_values = []
    for xv in x0:
        scale = max(1.0, abs(xv))
        if np.min(np.abs(bps - xv)) < 10 * epsilon * scale:
            points.append(None)
            u_values.append(float(xv))
            continue
        try:
            p = envelope_point(complex(xv, epsilon * scale), G, domain)
        except CriticalPointError:
            p = None
        if p is None or not (abs(p.x) < cap and abs(p.y) < cap):
            points.append(None)
        else:
            points.append((p.x, p.y))
        u_values.append(float(xv))
    return FrozenBoundary(points=points, u_values=u_values, tangencies=tangency_points(G, domain))


def tangency_points(G: HarmonicBoundaryData, domain: FundamentalDomain) -> List[TangencyPoint]:
    """
    Where the frozen boundary meets the region sides.

    For small r the liquid region touches x = 1 at u = -alpha_i^2 and y = 0
    at u = -1/beta_j^2. For large r it touches x - y = 1 at u = 0 and
    x - y = -1 at u = infinity. Each point is the envelope at p + i*delta.
    """
    found = []

    def probe(p, line, v=None):
        delta = TANGENCY_OFFSET * max(1.0, abs(p))
        try:
            e = envelope_point(v if v is not None else complex(p, delta), G, domain)
        except CriticalPointError:
            logger.warning("no tangency point at u=%g (degenerate)", p)
            return
        found.append(TangencyPoint(u=float(p), x=e.x, y=e.y, line=line))

    if domain.is_small_r:
        for a2 in np.unique(domain.alpha_array ** 2):
            probe(-float(a2), "x=1")
        for b in np.unique(domain.beta_array):
            probe(-1.0 / float(b) ** 2, "y=0")
    else:
        probe(0.0, "x-y=1")
        probe(float("inf"), "x-y=-1", v=1j / TANGENCY_OFFSET)
    return found


# =============================================================================
# Diagnostics
# =============================================================================

def tangent_identity_residual(p: EnvelopePoint, G: HarmonicBoundaryData) -> float:
    """|h - (s x + t y + G/theta)| at a mesh point."""
    return abs(p.h - (p.s * p.x + p.t * p.y + G.value(p.u) / p.theta))


def holomorphy_residual(u: complex, G: HarmonicBoundaryData, domain: FundamentalDomain,
                        step: float = 1e-5) -> float:
    """
    Largest relative d/d(conj u) of the four derivative functions.

    Each of (s theta)_u, (t theta)_u, theta_u and G_u should be holomorphic;
    the conjugate derivative is estimated by central differences.
    """
    u = complex(u)
    h = step * max(1.0, abs(u))
    if u.imag <= h:
        raise DomainError(f"u={u!r} too close to the real axis for step {h:g}")

    def f(v):
        return np.array(list(holomorphic_derivatives(v, domain)) + [G.derivative(v)])

    fx = (f(u + h) - f(u - h)) / (2 * h)
    fy = (f(u + 1j * h) - f(u - 1j * h)) / (2 * h)
    d_bar = 0.5 * (fx + 1j * fy)
    return float(np.max(np.abs(d_bar) / np.maximum(np.abs(f(u)), 1e-300)))


def gradient_residual(u: complex, G: HarmonicBoundaryData, domain: FundamentalDomain,
                      radius: float = 1e-4, n_ring: int = 8) -> float:
    """
    Compare a least-squares plane fit of nearby mesh points with (s(u), t(u)).

    Points on a ring of relative radius `radius` around u are mapped to
    (x, y, h); the fitted gradient of h must equal the slope at u.
    """
    centre = envelope_point(u, G, domain)
    rho = radius * max(abs(u), 1e-12)
    ring = u + rho * np.exp(2j * np.pi * np.arange(n_ring) / n_ring)
    pts = [centre] + [envelope_point(v, G, domain) for v in ring]
    M = np.array([[p.x, p.y, 1.0] for p in pts])
    rhs = np.array([p.h for p in pts])
    coef, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return float(max(abs(coef[0] - centre.s), abs(coef[1] - centre.t)))


def envelope_contact_residual(u: complex, G: HarmonicBoundaryData, domain: FundamentalDomain,
                              radius: float = 1e-3, n_ring: int = 16) -> float:
    """
    Second-order contact of the tangent plane at u with the nearby surface.

    Returns max |h - plane| / max |(dx, dy)|^2 over a ring around u; it stays
    bounded as the ring shrinks exactly when the plane is tangent.
    """
    c = envelope_point(u, G, domain)
    g_theta = G.value(c.u) / c.theta
    rho = radius * max(abs(u), 1e-12)
    ring = u + rho * np.exp(2j * np.pi * np.arange(n_ring) / n_ring)
    dev, dist2 = [], []
    for v in ring:
        p = envelope_point(v, G, domain)
        dev.append(abs(p.h - (c.s * p.x + c.t * p.y + g_theta)))
        dist2.append((p.x - c.x) ** 2 + (p.y - c.y) ** 2)
    return float(max(dev) / max(max(dist2), 1e-300))


# =============================================================================
# Lattice boundary conditions
# =============================================================================

def semi_boxed_large_r_heights(L: int, depth: Optional[int] = None) -> Region:
    """
    Lattice version of the large-r semi-boxed region, cut off at a + b = depth.

    Faces with |a - b| < L and a + b < depth are free. The rest carry the
    frozen heights: 0 on the axes, b when a - b >= L, a when b - a >= L and
    the zig-zag facet floor((a + b - L)/2) past the cut.
    """
    if L < 1:
        raise ParameterError(f"L must be positive, got {L}")
    depth = depth if depth is not None else 6 * L
    size = (depth + L) // 2 + 1
    a, b = np.meshgrid(np.arange(size + 1), np.arange(size + 1), indexing="ij")

    heights = np.floor_divide(np.maximum(a + b - L, 0), 2)
    heights = np.where(a - b >= L, b, heights)
    heights = np.where(b - a >= L, a, heights)
    heights = np.where((a == 0) | (b == 0), 0, heights)
    free = (a > 0) & (b > 0) & (np.abs(a - b) < L) & (a + b < depth)
    # heights outside the free set are boundary values
    return Region(heights=heights.astype(np.int64), free=free)


def analytic_heights(mesh: Sequence[EnvelopePoint], xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Interpolate mesh heights to the points (xs, ys); NaN outside the mesh hull."""
    ok = [p for p in mesh if p.flag is MeshFlag.OK and np.isfinite(p.x) and np.isfinite(p.y)]
    P = np.array([[p.x, p.y] for p in ok])
    H = np.array([p.h for p in ok])
    return griddata(P, H, (xs, ys), method="linear")
