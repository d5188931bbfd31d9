"""
The spectral curve and the conformal coordinate u.

A point u of the upper half-plane determines one w_i per column and one z_j
per row through

    alpha_i^2 w_i / (1 - w_i) = u = (1 - z_j) / (beta_j^2 z_j),

and with them the angle theta, the slope (s, t) and the fields (X, Y). The
map u -> (s, t) is a bijection onto the pure phase; `u_from_slopes` inverts it
with a damped Newton iteration in the chart u = exp(rho + i phi),
phi = pi / (1 + exp(-eta)).
"""

import logging
import warnings
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, root

from .config import (
    BOUNDARY_ANGLE_TOLERANCE,
    ETA_MAX,
    FD_STEP,
    INVERSION_GRID_SIZE,
    NEWTON_FALLBACK_STARTS,
    NEWTON_MAX_ITERATIONS,
    NEWTON_TOLERANCE,
    RHO_MAX,
)
from .errors import (
    BoundaryProximityWarning,
    ConvergenceError,
    DomainError,
    FiveVertexError,
    OutOfPhaseError,
    SingularArgumentError,
)
from .models import ConformalState, FundamentalDomain
from .special_functions import bfunc

logger = logging.getLogger(__name__)

# Hard limits of the chart while iterating
_ETA_CLIP = 36.0
_RHO_CLIP = 60.0
_RESIDUAL_PENALTY = 1e6


# =============================================================================
# Spectral curve
# =============================================================================

def solve_spectral(w: complex, r: float) -> complex:
    """
    Solve 1 - z - w + (1 - r^2) z w = 0 for z.

    Raises:
        SingularArgumentError: When 1 - (1 - r^2) w = 0.
    """
    denom = 1.0 - (1.0 - r * r) * w
    if denom == 0:
        raise SingularArgumentError(f"spectral curve has a pole at w = {w!r} for r = {r!r}")
    return (1.0 - w) / denom


def spectral_residual(z: complex, w: complex, r: float) -> float:
    return abs(1.0 - z - w + (1.0 - r * r) * z * w)


# =============================================================================
# Forward map
# =============================================================================

def _check_upper(u: complex) -> complex:
    u = complex(u)
    if not np.isfinite(u) or u.imag <= 0:
        raise DomainError(f"u must lie in the open upper half-plane, got {u!r}")
    return u


def theta_of(u, domain: FundamentalDomain):
    """theta = arg u (small r) or 2 pi - arg u (large r)."""
    phi = np.angle(u)
    return phi if domain.is_small_r else 2.0 * np.pi - phi


def w_of(u, domain: FundamentalDomain) -> np.ndarray:
    u = np.asarray(u, dtype=complex)[..., None]
    return u / (u + domain.alpha_array ** 2)


def z_of(u, domain: FundamentalDomain) -> np.ndarray:
    u = np.asarray(u, dtype=complex)[..., None]
    return 1.0 / (1.0 + domain.beta_array ** 2 * u)


def one_minus_w(u, domain: FundamentalDomain) -> np.ndarray:
    """1 - w_i = alpha_i^2 / (u + alpha_i^2), without cancellation for large |u|."""
    u = np.asarray(u, dtype=complex)[..., None]
    a2 = domain.alpha_array ** 2
    return a2 / (u + a2)


def one_minus_z(u, domain: FundamentalDomain) -> np.ndarray:
    """1 - z_j = beta_j^2 u / (1 + beta_j^2 u), without cancellation for small |u|."""
    u = np.asarray(u, dtype=complex)[..., None]
    b2u = domain.beta_array ** 2 * u
    return b2u / (1.0 + b2u)


def slopes_from_u(u, domain: FundamentalDomain) -> Tuple[np.ndarray, np.ndarray]:
    """Slopes (s, t) at u; vectorized over arrays of u."""
    u = np.asarray(u, dtype=complex)
    theta = theta_of(u, domain)
    arg_w = np.angle(w_of(u, domain))
    arg_q = np.angle(1.0 + domain.beta_array ** 2 * u[..., None])
    if domain.is_small_r:
        s = arg_w.mean(axis=-1) / theta
        t = arg_q.mean(axis=-1) / theta
    else:
        s = (np.pi - arg_w).mean(axis=-1) / theta
        t = (np.pi - arg_q).mean(axis=-1) / theta
    return s, t


def _bfunc_masked(z: np.ndarray) -> np.ndarray:
    """B with NaN at the singular points instead of an exception."""
    bad = (z == 0) | (z == 1)
    if not np.any(bad):
        return np.asarray(bfunc(z))
    out = np.asarray(bfunc(np.where(bad, 0.5, z)), dtype=float)
    out[bad] = np.nan
    return out


def fields_from_u(u, domain: FundamentalDomain) -> Tuple[np.ndarray, np.ndarray]:
    """Fields (X, Y) at u; vectorized over arrays of u."""
    w = w_of(u, domain)
    z = z_of(u, domain)
    bz = _bfunc_masked(np.conj(z))
    bw = _bfunc_masked(w)
    if domain.is_small_r:
        X = -bz.mean(axis=-1)
        Y = -bw.mean(axis=-1)
    else:
        X = (bz - np.log(np.abs(z * one_minus_z(u, domain)))).mean(axis=-1)
        Y = (bw - np.log(np.abs(w * one_minus_w(u, domain)))).mean(axis=-1)
    return X, Y


def coords_from_u(u: complex, domain: FundamentalDomain) -> ConformalState:
    """
    Full conformal state at a point of the upper half-plane.

    Raises:
        DomainError: If Im u <= 0.
    """
    u = _check_upper(u)
    w = w_of(u, domain)
    z = z_of(u, domain)
    s, t = slopes_from_u(u, domain)
    X, Y = fields_from_u(u, domain)
    return ConformalState(
        u=u, w=w, z=z,
        one_minus_w=one_minus_w(u, domain), one_minus_z=one_minus_z(u, domain),
        theta=float(theta_of(u, domain)),
        s=float(s), t=float(t), X=float(X), Y=float(Y),
    )


def state_residuals(state: ConformalState, domain: FundamentalDomain) -> Tuple[float, float]:
    """
    Residuals of the defining relations.

    Returns:
        (max_ij |1 - z_j - w_i + (1 - r_ij^2) z_j w_i|,
         max relative deviation of alpha_i^2 w_i/(1 - w_i) and (1 - z_j)/(beta_j^2 z_j) from u)

    The complements 1 - w and 1 - z are the ones stored on the state, so
    the second residual stays at rounding level for |u| near 0 or infinity.
    """
    w = state.w[:, None]
    z = state.z[None, :]
    r2 = domain.products ** 2
    curve = np.abs(1.0 - z - w + (1.0 - r2) * z * w).max()
    from_w = domain.alpha_array ** 2 * state.w / state.one_minus_w
    from_z = state.one_minus_z / (domain.beta_array ** 2 * state.z)
    scale = max(1.0, abs(state.u))
    param = max(np.abs(from_w - state.u).max(), np.abs(from_z - state.u).max()) / scale
    return float(curve), float(param)


# =============================================================================
# Coexistence curve (small r)
# =============================================================================

def coexistence_point(R, domain: FundamentalDomain) -> Tuple[np.ndarray, np.ndarray]:
    """Limit of (s, t) along u = R + i0 for R > 0 in the small-r regime."""
    R = np.asarray(R, dtype=float)[..., None]
    a2 = domain.alpha_array ** 2
    b2 = domain.beta_array ** 2
    s = (a2 / (R + a2)).mean(axis=-1)
    t = (b2 * R / (1.0 + b2 * R)).mean(axis=-1)
    return s, t


def coexistence_R(s: float, domain: FundamentalDomain) -> float:
    """Invert s(R) (strictly decreasing from 1 to 0) for R."""
    def g(log_r: float) -> float:
        return float(coexistence_point(np.exp(log_r), domain)[0]) - s

    lo, hi = -50.0, 50.0
    while g(lo) < 0 and lo > -700:
        lo *= 2
    while g(hi) > 0 and hi < 700:
        hi *= 2
    if g(lo) <= 0:
        return float(np.exp(lo))
    if g(hi) >= 0:
        return float(np.exp(hi))
    return float(np.exp(brentq(g, lo, hi, xtol=1e-14, rtol=1e-15)))


def coexistence_t(s: float, domain: FundamentalDomain) -> float:
    """Height of the coexistence curve above the slope s."""
    return float(coexistence_point(coexistence_R(s, domain), domain)[1])


def in_coexistence(s: float, t: float, domain: FundamentalDomain, tol: float = 0.0) -> bool:
    """True in the closed region between the coexistence curve and s + t = 1 (small r only)."""
    if not domain.is_small_r or s < 0 or t < 0 or s + t > 1.0 + tol:
        return False
    if s <= 0 or s >= 1:
        return False
    return t >= coexistence_t(s, domain) - tol


def in_pure_phase(s: float, t: float, domain: FundamentalDomain, margin: float = 0.0) -> bool:
    """True strictly inside the region where u -> (s, t) is onto."""
    if s <= margin or t <= margin or s + t >= 1.0 - margin:
        return False
    if domain.is_small_r:
        return t < coexistence_t(s, domain) - margin
    return True


# =============================================================================
# Inversion
# =============================================================================

def _chart(rho, eta):
    phi = np.pi / (1.0 + np.exp(-eta))
    return np.exp(rho + 1j * phi), phi


@lru_cache(maxsize=32)
def _inversion_grid(domain: FundamentalDomain):
    """Start points for the inverse problems; read-only once built."""
    n = INVERSION_GRID_SIZE
    rho, eta = np.meshgrid(
        np.linspace(-RHO_MAX, RHO_MAX, n),
        np.linspace(-ETA_MAX, ETA_MAX, n),
        indexing="ij",
    )
    u, _ = _chart(rho, eta)
    s, t = slopes_from_u(u, domain)
    X, Y = fields_from_u(u, domain)
    arrays = tuple(np.ascontiguousarray(a).ravel() for a in (rho, eta, s, t, X, Y))
    for arr in arrays:
        arr.setflags(write=False)
    logger.debug("built %dx%d inversion grid for %s", n, n, domain.as_dict())
    return arrays


def _slope_residual(rho: float, eta: float, target: Tuple[float, float],
                    domain: FundamentalDomain):
    """Residual (s - s*, t - t*) and its Jacobian in (rho, eta)."""
    u, phi = _chart(rho, eta)
    a2 = domain.alpha_array ** 2
    b2 = domain.beta_array ** 2
    q = u / (u + a2)
    p = b2 * u / (1.0 + b2 * u)

    arg_w = phi - np.angle(u + a2)
    arg_p = np.angle(1.0 + b2 * u)
    if domain.is_small_r:
        theta, theta_phi = phi, 1.0
        S, T = arg_w.mean(), arg_p.mean()
        S_rho, S_phi = -q.imag.mean(), 1.0 - q.real.mean()
        T_rho, T_phi = p.imag.mean(), p.real.mean()
    else:
        theta, theta_phi = 2.0 * np.pi - phi, -1.0
        S, T = (np.pi - arg_w).mean(), (np.pi - arg_p).mean()
        S_rho, S_phi = q.imag.mean(), q.real.mean() - 1.0
        T_rho, T_phi = -p.imag.mean(), -p.real.mean()

    s, t = S / theta, T / theta
    dphi = phi * (np.pi - phi) / np.pi
    jac = np.array([
        [S_rho / theta, (S_phi - s * theta_phi) / theta * dphi],
        [T_rho / theta, (T_phi - t * theta_phi) / theta * dphi],
    ])
    return np.array([s - target[0], t - target[1]]), jac


def _newton(rho: float, eta: float, target: Tuple[float, float], domain: FundamentalDomain):
    F, J = _slope_residual(rho, eta, target, domain)
    norm = np.abs(F).max()
    for _ in range(NEWTON_MAX_ITERATIONS):
        if norm <= NEWTON_TOLERANCE:
            break
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while lam > 1e-12:
            r_new = float(np.clip(rho + lam * step[0], -_RHO_CLIP, _RHO_CLIP))
            e_new = float(np.clip(eta + lam * step[1], -_ETA_CLIP, _ETA_CLIP))
            F_new, J_new = _slope_residual(r_new, e_new, target, domain)
            if np.abs(F_new).max() < norm:
                break
            lam *= 0.5
        else:
            break
        rho, eta, F, J = r_new, e_new, F_new, J_new
        norm = np.abs(F).max()
    return rho, eta, norm


def _warn_if_near_boundary(rho: float, phi: float, what: str) -> None:
    if phi < BOUNDARY_ANGLE_TOLERANCE or np.pi - phi < BOUNDARY_ANGLE_TOLERANCE:
        warnings.warn(f"{what}: preimage within {BOUNDARY_ANGLE_TOLERANCE:g} of the real axis "
                      f"(arg u = {phi:.3g})", BoundaryProximityWarning, stacklevel=3)
    elif abs(rho) > RHO_MAX:
        warnings.warn(f"{what}: preimage at |u| = {np.exp(rho):.3g}",
                      BoundaryProximityWarning, stacklevel=3)


def u_from_slopes(s: float, t: float, domain: FundamentalDomain) -> complex:
    """
    The unique u in the upper half-plane with slopes (s, t).

    Args:
        s: Target horizontal slope.
        t: Target vertical slope.
        domain: Fundamental domain.

    Returns:
        u with |slopes(u) - (s, t)| below the Newton tolerance.

    Raises:
        OutOfPhaseError: If (s, t) is not strictly inside the pure phase.
        ConvergenceError: If Newton fails from every tried start.
    """
    if not in_pure_phase(s, t, domain):
        raise OutOfPhaseError(f"slope ({s:.6g}, {t:.6g}) is outside the pure phase")

    rho_g, eta_g, s_g, t_g, _, _ = _inversion_grid(domain)
    order = np.argsort((s_g - s) ** 2 + (t_g - t) ** 2)
    best = None
    for k, idx in enumerate(order[:NEWTON_FALLBACK_STARTS + 1]):
        rho, eta, norm = _newton(float(rho_g[idx]), float(eta_g[idx]), (s, t), domain)
        if best is None or norm < best[2]:
            best = (rho, eta, norm)
        if norm <= NEWTON_TOLERANCE:
            break
        logger.debug("Newton start %d for (%g, %g) stalled at %.2e", k, s, t, norm)

    rho, eta, norm = best
    if norm > 100 * NEWTON_TOLERANCE:
        raise ConvergenceError(f"u_from_slopes({s:.6g}, {t:.6g}) stalled at residual {norm:.2e}")
    u, phi = _chart(rho, eta)
    _warn_if_near_boundary(rho, phi, "u_from_slopes")
    return complex(u)


def u_from_fields(X: float, Y: float, domain: FundamentalDomain,
                  tol: float = 1e-10, starts: int = NEWTON_FALLBACK_STARTS + 1,
                  extra_starts: Sequence[Tuple[float, float]] = ()) -> Optional[complex]:
    """
    The u whose fields are (X, Y), or None when no start converges.

    Uses scipy's hybrid root finder in the (rho, eta) chart, first from each
    of extra_starts and then from the `starts` nearest points of the cached
    grid. None normally means (X, Y) lies outside the amoeba.
    """
    rho_g, eta_g, _, _, X_g, Y_g = _inversion_grid(domain)
    dist = (X_g - X) ** 2 + (Y_g - Y) ** 2
    dist = np.where(np.isfinite(dist), dist, np.inf)
    order = np.argsort(dist)
    scale = max(1.0, abs(X), abs(Y))

    penalty = [_RESIDUAL_PENALTY * scale, _RESIDUAL_PENALTY * scale]

    def residual(v):
        # hybr may step to non-finite points or to where w or z rounds to 0 or 1
        if not np.all(np.isfinite(v)):
            return penalty
        rho = np.clip(v[0], -_RHO_CLIP, _RHO_CLIP)
        eta = np.clip(v[1], -_ETA_CLIP, _ETA_CLIP)
        u, _ = _chart(rho, eta)
        try:
            with np.errstate(all="ignore"):
                Xu, Yu = fields_from_u(u, domain)
        except FiveVertexError:
            return penalty
        out = [float(Xu) - X, float(Yu) - Y]
        return out if np.all(np.isfinite(out)) else penalty

    points = list(extra_starts) + [(rho_g[i], eta_g[i]) for i in order[:starts]]
    for x0 in points:
        sol = root(residual, list(x0), method="hybr", options={"xtol": 1e-14})
        if not np.all(np.isfinite(sol.x)):
            continue
        if np.abs(residual(sol.x)).max() <= tol * scale:
            rho = float(np.clip(sol.x[0], -_RHO_CLIP, _RHO_CLIP))
            eta = float(np.clip(sol.x[1], -_ETA_CLIP, _ETA_CLIP))
            u, _ = _chart(rho, eta)
            return complex(u)
    logger.debug("no preimage for fields (%g, %g)", X, Y)
    return None


# =============================================================================
# Finite-difference checks
# =============================================================================

def _wirtinger(f, u: complex, h: float) -> np.ndarray:
    """d/du of a real vector function by central differences with one Richardson level."""
    def central(step):
        dx = (np.asarray(f(u + step)) - np.asarray(f(u - step))) / (2 * step)
        dy = (np.asarray(f(u + 1j * step)) - np.asarray(f(u - 1j * step))) / (2 * step)
        return 0.5 * (dx - 1j * dy)

    return (4.0 * central(h / 2) - central(h)) / 3.0


def orientation(domain: FundamentalDomain) -> int:
    """
    Sign of det d(s, t)/d(Re u, Im u).

    The slope map preserves orientation for small r and reverses it for
    large r, where theta = 2 pi - arg u decreases as arg u grows.
    """
    return 1 if domain.is_small_r else -1


def wirtinger_check(u: complex, domain: FundamentalDomain,
                    step: float = FD_STEP) -> Tuple[float, float]:
    """
    Check the isothermal identities

        Y_u / s_u = -i eps theta^2/pi,    X_u / t_u = i eps theta^2/pi,

    with eps = orientation(domain).

    Returns:
        (|Y_u/s_u + i eps theta^2/pi|, |X_u/t_u - i eps theta^2/pi|)
    """
    u = _check_upper(u)
    h = step * max(1.0, abs(u))
    if u.imag <= h:
        raise DomainError(f"u = {u!r} too close to the real axis for step {h:g}")

    def f(v):
        s, t = slopes_from_u(v, domain)
        X, Y = fields_from_u(v, domain)
        return [s, t, X, Y]

    s_u, t_u, X_u, Y_u = _wirtinger(f, u, h)
    k = orientation(domain) * theta_of(u, domain) ** 2 / np.pi
    return float(abs(Y_u / s_u + 1j * k)), float(abs(X_u / t_u - 1j * k))


def jacobian_determinant(u: complex, domain: FundamentalDomain, step: float = FD_STEP) -> float:
    """
    det d(s, t)/d(Re u, Im u) by central differences.

    Nonzero on the whole half-plane with the sign of orientation(domain).
    """
    u = _check_upper(u)
    h = min(step * max(1.0, abs(u)), 0.5 * u.imag)

    def st(v):
        return np.array(slopes_from_u(v, domain), dtype=float)

    dx = (st(u + h) - st(u - h)) / (2 * h)
    dy = (st(u + 1j * h) - st(u - 1j * h)) / (2 * h)
    return float(dx[0] * dy[1] - dx[1] * dy[0])
