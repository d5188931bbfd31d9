"""
Phase diagram in the (X, Y) plane.

The disordered region (amoeba) is the image of the upper half-plane under
u -> (X(u), Y(u)); its boundary is traced as u runs along the real axis.
The fields diverge as u approaches -alpha_i^2, -1/beta_j^2 and, for large r,
0 and infinity; these produce the tentacles that separate the frozen and
semi-frozen phases.
"""

import logging
from typing import List, Tuple

import numpy as np

from .config import FIELD_CAP, TENTACLE_JUMP
from .conformal import fields_from_u
from .errors import InvalidArgumentError
from .models import (
    AmoebaFlag,
    AmoebaSample,
    AmoebaTrace,
    FieldPoint,
    FundamentalDomain,
    Phase,
    PhaseClassification,
    Tentacle,
)
from .thermodynamics import free_energy_search

logger = logging.getLogger(__name__)

_CLUSTER = 7.0          # tanh clustering strength on finite intervals
_LOG_SPAN = (1e-7, 1e7)  # relative reach of the log cover on infinite intervals


def breakpoints(domain: FundamentalDomain) -> np.ndarray:
    """Sorted distinct real points where the fields may diverge."""
    pts = np.concatenate([-domain.alpha_array ** 2, -1.0 / domain.beta_array ** 2, [0.0]])
    return np.unique(pts)


def real_axis_cover(domain: FundamentalDomain, n_samples: int) -> np.ndarray:
    """
    Increasing sample of the real line accumulating at every breakpoint and at infinity.

    Finite intervals use tanh clustering; the two unbounded ends use
    geometric spacing.
    """
    bps = breakpoints(domain)
    n_intervals = len(bps) + 1
    k = max(8, n_samples // n_intervals)
    scale = max(1.0, float(np.abs(bps).max()))

    pieces = [bps[0] - scale * np.geomspace(_LOG_SPAN[1], _LOG_SPAN[0], k)]
    tau = np.linspace(-_CLUSTER, _CLUSTER, k)
    for a, b in zip(bps[:-1], bps[1:]):
        pieces.append(0.5 * (a + b) + 0.5 * (b - a) * np.tanh(tau) / np.tanh(_CLUSTER))
    pieces.append(bps[-1] + scale * np.geomspace(_LOG_SPAN[0], _LOG_SPAN[1], k))
    return np.concatenate(pieces)


def _fields_at(u, domain):
    X, Y = fields_from_u(u, domain)
    return np.asarray(X, dtype=float), np.asarray(Y, dtype=float)


def tentacles(domain: FundamentalDomain, deltas: Tuple[float, float] = (1e-3, 1e-6)) -> List[Tentacle]:
    """
    Boundary points of the upper half-plane where (X, Y) diverges.

    A point p is a tentacle if the fields at p + i*delta move by more than
    TENTACLE_JUMP between the two probe heights. Infinity is probed along the
    imaginary axis at heights 1/delta.
    """
    found = []
    for p in breakpoints(domain):
        X1, Y1 = _fields_at(p + 1j * deltas[0], domain)
        X2, Y2 = _fields_at(p + 1j * deltas[1], domain)
        _record_tentacle(found, float(p), X2 - X1, Y2 - Y1, domain)

    X1, Y1 = _fields_at(1j / deltas[0], domain)
    X2, Y2 = _fields_at(1j / deltas[1], domain)
    _record_tentacle(found, float("inf"), X2 - X1, Y2 - Y1, domain)
    logger.info("found %d tentacles", len(found))
    return found


def _record_tentacle(found, p, dX, dY, domain):
    size = float(np.hypot(dX, dY))
    if size <= TENTACLE_JUMP:
        return
    labels = []
    if np.isinf(p):
        labels.append("u=inf")
    else:
        labels += [f"-alpha_{i}^2" for i, a in enumerate(domain.alphas) if np.isclose(p, -a * a)]
        labels += [f"-1/beta_{j}^2" for j, b in enumerate(domain.betas) if np.isclose(p, -1 / (b * b))]
        if p == 0.0:
            labels.append("u=0")
    found.append(Tentacle(point=p, direction=(float(dX) / size, float(dY) / size),
                          label=",".join(labels)))


def amoeba_boundary(domain: FundamentalDomain, epsilon: float = 1e-2,
                    n_samples: int = 2000, cap: float = FIELD_CAP) -> AmoebaTrace:
    """
    Trace the amoeba boundary as the image of u = x + i*0.

    Fields are evaluated at x + i*eps and x + i*eps/10 and extrapolated
    linearly to eps = 0. Samples within 10*eps of a breakpoint are flagged
    PINCH; samples with |X| or |Y| beyond the cap are clipped and flagged
    CAPPED.

    Args:
        domain: Fundamental domain.
        epsilon: Offset from the real axis, in (0, 0.1].
        n_samples: Approximate number of samples, at least 100.
        cap: Field magnitude bound.

    Raises:
        InvalidArgumentError: If epsilon or n_samples is out of range.
    """
    if not (0 < epsilon <= 0.1):
        raise InvalidArgumentError(f"epsilon must be in (0, 0.1], got {epsilon}")
    if n_samples < 100:
        raise InvalidArgumentError(f"n_samples must be at least 100, got {n_samples}")

    x = real_axis_cover(domain, n_samples)
    X1, Y1 = _fields_at(x + 1j * epsilon, domain)
    X2, Y2 = _fields_at(x + 1j * epsilon / 10, domain)
    X0 = X2 - (X1 - X2) / 9.0
    Y0 = Y2 - (Y1 - Y2) / 9.0

    bps = breakpoints(domain)
    pinch = np.min(np.abs(x[:, None] - bps[None, :]), axis=1) < 10 * epsilon
    capped = (np.abs(X0) > cap) | (np.abs(Y0) > cap) | ~np.isfinite(X0) | ~np.isfinite(Y0)

    samples = []
    for xi, Xi, Yi, is_pinch, is_capped in zip(x, X0, Y0, pinch, capped):
        flag = AmoebaFlag.CAPPED if is_capped else (AmoebaFlag.PINCH if is_pinch else AmoebaFlag.REGULAR)
        Xi = float(np.clip(np.nan_to_num(Xi, nan=0.0), -cap, cap))
        Yi = float(np.clip(np.nan_to_num(Yi, nan=0.0), -cap, cap))
        samples.append(AmoebaSample(u=complex(xi, 0.0), X=Xi, Y=Yi, flag=flag))

    logger.info("traced %d amoeba samples (%d capped, %d pinch)", len(samples),
                int(capped.sum()), int((pinch & ~capped).sum()))
    return AmoebaTrace(samples=samples, tentacles=tentacles(domain), epsilon=epsilon, cap=cap)


def classify_phase(fields: FieldPoint, domain: FundamentalDomain) -> PhaseClassification:
    """
    Phase at the given fields.

    Returns:
        Disordered with the interior maximizing slope, Frozen with one of the
        candidate slopes, or Boundary when the maximizer is at a tie between
        candidates or its preimage sits on the edge of the half-plane.
    """
    phase, slope, F, u, tied = free_energy_search(fields, domain)
    logger.debug("fields (%g, %g): %s slope (%g, %g)", fields.X, fields.Y, phase.value, slope.s, slope.t)
    return PhaseClassification(phase=phase, slope=slope, free_energy=F, u=u, tied=tied)


def inward_normals(trace: AmoebaTrace, domain: FundamentalDomain) -> np.ndarray:
    """
    Unit normals to the traced curve pointing into the amoeba.

    The side is chosen by the direction in which the fields move as u leaves
    the real axis.
    """
    eps = trace.epsilon
    x = np.array([s.u.real for s in trace.samples])
    P = np.array([[s.X, s.Y] for s in trace.samples])
    tangent = np.gradient(P, axis=0)
    normal = np.stack([-tangent[:, 1], tangent[:, 0]], axis=-1)

    X1, Y1 = _fields_at(x + 1j * eps, domain)
    X2, Y2 = _fields_at(x + 1j * eps / 10, domain)
    into = np.stack([X1 - X2, Y1 - Y2], axis=-1)
    normal *= np.where(np.sum(normal * into, axis=-1) < 0, -1.0, 1.0)[:, None]
    norm = np.linalg.norm(normal, axis=-1, keepdims=True)
    return normal / np.where(norm > 0, norm, 1.0)


def crossing_check(domain: FundamentalDomain, trace: AmoebaTrace, n_checks: int = 12,
                   offset: float = 0.05, window: float = 5.0) -> Tuple[int, int]:
    """
    Classify points just inside and just outside the traced boundary.

    Returns:
        (number of transversal segments tested, number whose classification
        did not flip from Disordered inside to Frozen outside)
    """
    normals = inward_normals(trace, domain)
    usable = [
        k for k, s in enumerate(trace.samples)
        if s.flag is AmoebaFlag.REGULAR and abs(s.X) < window and abs(s.Y) < window
        # for small r the positive axis collapses onto the origin
        and not (domain.is_small_r and s.u.real > 0)
    ]
    if not usable:
        return 0, 0
    picks = [usable[i] for i in np.linspace(0, len(usable) - 1, min(n_checks, len(usable))).astype(int)]
    failures = 0
    for k in picks:
        sample, n = trace.samples[k], normals[k]
        inside = classify_phase(FieldPoint(sample.X + offset * n[0], sample.Y + offset * n[1]), domain)
        outside = classify_phase(FieldPoint(sample.X - offset * n[0], sample.Y - offset * n[1]), domain)
        if inside.phase is not Phase.DISORDERED or outside.phase is Phase.DISORDERED:
            failures += 1
            logger.debug("no flip at x=%g: inside %s, outside %s", sample.u.real,
                         inside.phase.value, outside.phase.value)
    return len(picks), failures
