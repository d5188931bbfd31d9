"""
Verification suite behind `fivevertex verify`.

Each check returns (residual, tolerance, detail) for one domain; the runner
turns it into an InvariantResult and writes the JSON report. The quick level
keeps every check under a few seconds; the full level adds the large
finite-size and Monte Carlo runs and the larger random samples.
"""

import json
import logging
import math
import warnings
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import numpy as np

from .conformal import coords_from_u, fields_from_u, slopes_from_u, state_residuals, u_from_slopes, wirtinger_check
from .config import get_default_seed
from .errors import BoundaryProximityWarning, FiveVertexError, OutOfPhaseError, StencilError
from .lattice_verification import (
    apoly_check,
    check_commutation as commutator,
    column_transfer_partition_function,
    enumerate_torus,
    finite_size_free_energy,
    transfer_partition_function,
)
from .limit_shape import (
    builtin_G,
    gradient_residual,
    limit_shape_mesh,
    polar_grid,
    semi_boxed_large_r_heights,
    tangency_points,
    tangent_identity_residual,
)
from .models import FieldPoint, FundamentalDomain, InvariantResult, MeshFlag
from .phase_diagram import amoeba_boundary, crossing_check
from .sampler import (
    empirical_height_profile,
    enumerate_region,
    exact_height_mean,
    limit_shape_discrepancy,
    run_chains,
    staircase_region,
)
from .special_functions import dilog, dilog_quadrature
from .thermodynamics import coexistence_boundary, duality_residual, free_energy, hessian_identity

logger = logging.getLogger(__name__)

LEVELS = ("quick", "full")

CheckResult = Tuple[float, float, str]
Check = Callable[[FundamentalDomain, np.random.Generator, bool], CheckResult]

_LATTICE_FIELDS = FieldPoint(0.3, -0.2)


def _upper_points(rng: np.random.Generator, n: int, log_radius: float = 1.3,
                  margin: float = 0.15) -> np.ndarray:
    radius = 10 ** rng.uniform(-log_radius, log_radius, n)
    angle = rng.uniform(margin, np.pi - margin, n)
    return radius * np.exp(1j * angle)


def _skipped(reason: str) -> CheckResult:
    return 0.0, 0.0, f"skipped: {reason}"


def _period(domain: FundamentalDomain) -> int:
    return math.lcm(domain.m1, domain.m2)


def _example_G(domain: FundamentalDomain):
    name = "semi_boxed_small_r" if domain.is_small_r else "semi_boxed_large_r"
    return builtin_G(name, domain)


# =============================================================================
# Analytic checks
# =============================================================================

def check_dilog(domain, rng, full) -> CheckResult:
    z = 10 ** rng.uniform(-2, 2, 50) * np.exp(1j * rng.uniform(0.05, np.pi - 0.05, 50))
    worst = max(abs(complex(dilog(p)) - dilog_quadrature(p)) for p in z)
    worst = max(worst, abs(complex(dilog(1.0)) - np.pi ** 2 / 6))
    return worst, 1e-9, "50 points against quadrature, and Li2(1)"


def check_spectral(domain, rng, full) -> CheckResult:
    n = 10_000 if full else 500
    worst = 0.0
    for u in _upper_points(rng, n, log_radius=2.0, margin=0.01):
        worst = max(worst, *state_residuals(coords_from_u(u, domain), domain))
    return worst, 1e-12, f"{n} points"


def check_round_trip(domain, rng, full) -> CheckResult:
    worst, used = 0.0, 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryProximityWarning)
        for u in _upper_points(rng, 20):
            s, t = slopes_from_u(u, domain)
            try:
                back = u_from_slopes(float(s), float(t), domain)
            except OutOfPhaseError:
                continue
            worst = max(worst, abs(back - u) / max(1.0, abs(u)))
            used += 1
    return worst, 1e-8, f"{used} points"


def check_duality(domain, rng, full) -> CheckResult:
    worst = max(duality_residual(u, domain) for u in _upper_points(rng, 100))
    return worst, 1e-6, "d sigma = X ds + Y dt at 100 points"


def check_hessian(domain, rng, full) -> CheckResult:
    n = 20 if full else 5
    worst, skipped = 0.0, 0
    for u in _upper_points(rng, n, log_radius=0.5, margin=0.4):
        try:
            worst = max(worst, hessian_identity(u, domain))
        except StencilError:
            skipped += 1
    return worst, 1e-3, f"{n - skipped} points, {skipped} stencils crossed the coexistence curve"


def check_wirtinger(domain, rng, full) -> CheckResult:
    worst = max(max(wirtinger_check(u, domain)) for u in _upper_points(rng, 20, log_radius=1.0, margin=0.3))
    return worst, 1e-5, "20 points"


def check_coexistence(domain, rng, full) -> CheckResult:
    if not domain.is_small_r:
        return _skipped("large r has no coexistence region")
    low = coexistence_boundary(domain, 1e-12)
    high = coexistence_boundary(domain, 1e12)
    worst = max(abs(low.s - 1), abs(low.t), abs(high.s), abs(high.t - 1))
    return worst, 1e-9, "R -> 0 gives (1, 0), R -> inf gives (0, 1)"


def check_crossing(domain, rng, full) -> CheckResult:
    trace = amoeba_boundary(domain, n_samples=2000)
    tested, failures = crossing_check(domain, trace, n_checks=12 if full else 6)
    return float(failures), 0.0, f"{tested} transversals"


# =============================================================================
# Limit shape
# =============================================================================

def check_tangent_identity(domain, rng, full) -> CheckResult:
    G = _example_G(domain)
    n = 60 if full else 20
    mesh = limit_shape_mesh(G, domain, polar_grid(n, n, 1e-2, 1e2))
    worst = max((tangent_identity_residual(p, G) / max(1.0, abs(p.h))
                 for p in mesh if p.flag is MeshFlag.OK), default=0.0)
    return worst, 1e-10, f"{len(mesh)} mesh points"


def check_gradient(domain, rng, full) -> CheckResult:
    G = _example_G(domain)
    points = _upper_points(rng, 10 if full else 4, log_radius=0.7, margin=0.3)
    return max(gradient_residual(u, G, domain) for u in points), 1e-3, f"{len(points)} points"


def check_tangency(domain, rng, full) -> CheckResult:
    G = _example_G(domain)
    worst = 0.0
    for p in tangency_points(G, domain):
        target = {"x=1": p.x - 1.0, "y=0": p.y, "x-y=1": p.x - p.y - 1.0, "x-y=-1": p.x - p.y + 1.0}
        worst = max(worst, abs(target[p.line]))
    return worst, 1e-4, "frozen boundary touches the region sides"


# =============================================================================
# Lattice oracles
# =============================================================================

def check_transfer_commutation(domain, rng, full) -> CheckResult:
    period = _period(domain)
    sizes = [N for N in range(period, (8 if full else 6) + 1, period) if N >= 2]
    if not sizes:
        return _skipped(f"period {period} too large")
    if domain.is_small_r:
        hi = 0.95 / max(domain.alphas)
        lo = 0.1 * hi
    else:
        lo, hi = 1.05 / min(domain.alphas), 3.0 / min(domain.alphas)
    worst, count = 0.0, 0
    for N in sizes:
        for n in range(1, min(4, N - 1) + 1):
            b1, b2 = rng.uniform(lo, hi, 2)
            worst = max(worst, commutator(N, n, b1, b2, domain, _LATTICE_FIELDS))
            count += 1
    return worst, 1e-12, f"{count} (N, n) pairs"


def check_apoly(domain, rng, full) -> CheckResult:
    worst = 0.0
    for length in range(1, 9):
        residual, _ = apoly_check(rng.uniform(0.1, 3.0, length))
        worst = max(worst, float(residual))
    return worst, 0.0, "lengths 1 to 8, exact arithmetic"


def check_oracles(domain, rng, full) -> CheckResult:
    period = _period(domain)
    sizes = [N for N in range(period, 5, period)]
    if not sizes:
        return _skipped(f"period {period} exceeds 4")
    worst = 0.0
    for N in sizes:
        Z = sum(w for _, w, _ in enumerate_torus(N, domain, _LATTICE_FIELDS))
        for other in (transfer_partition_function(N, domain, _LATTICE_FIELDS),
                      column_transfer_partition_function(N, domain, _LATTICE_FIELDS)):
            worst = max(worst, abs(other - Z) / Z)
    return worst, 1e-12, f"N in {sizes}"


def check_finite_size(domain, rng, full) -> CheckResult:
    if 4 % _period(domain):
        return _skipped("N = 4, 8, 12, 16 not multiples of the period")
    worst, notes = 0.0, []
    for u in (1j, -0.5 + 0.8j, 0.6 + 1.2j):
        X, Y = fields_from_u(u, domain)
        fields = FieldPoint(float(X), float(Y))
        F = free_energy(fields, domain)
        torus = [abs(finite_size_free_energy(N, domain, fields, method="dense") - F) for N in (4, 8, 12)]
        strip = [abs(finite_size_free_energy(N, domain, fields, method="strip") - F) for N in (4, 8, 12, 16)]
        for errors in (torus, strip):
            if not all(b < a for a, b in zip(errors, errors[1:])):
                worst = math.inf
        worst = max(worst, strip[-1])
        notes.append("torus " + " ".join(f"{e:.2e}" for e in torus)
                     + " / cylinder " + " ".join(f"{e:.2e}" for e in strip))
    return worst, 5e-2, "; ".join(notes)


# =============================================================================
# Monte Carlo
# =============================================================================

def check_mcmc_exact(domain, rng, full) -> CheckResult:
    region = staircase_region(5, 5)
    states, log_w = enumerate_region(region, domain)
    exact = exact_height_mean(states, log_w)
    run = run_chains(region, domain, n_chains=1000 if full else 300, burn_in=200, sweeps=0,
                     seed=int(rng.integers(2 ** 31)))
    profile = empirical_height_profile(run.final)
    free = region.free & (profile.stderr > 0)
    z = np.abs(profile.mean - exact)[free] / profile.stderr[free]
    return float(z.max()) if z.size else 0.0, 3.0, f"max z-score over {int(free.sum())} faces"


def check_mcmc_limit_shape(domain, rng, full) -> CheckResult:
    if domain.is_small_r:
        return _skipped("semi-boxed comparison uses the large-r example")
    L = 64
    mesh = limit_shape_mesh(_example_G(domain), domain, polar_grid(80, 80))
    run = run_chains(semi_boxed_large_r_heights(L), domain, n_chains=2, burn_in=4000, sweeps=1000,
                     thin=10, seed=int(rng.integers(2 ** 31)))
    window = (0.25, 1.75, 0.25, 1.75)
    return limit_shape_discrepancy(run.profile, mesh, L, window), 0.05, f"L = {L}, window {window}"


# name, level, check
SUITE: List[Tuple[str, str, Check]] = [
    ("dilog_quadrature", "quick", check_dilog),
    ("spectral_relations", "quick", check_spectral),
    ("slope_round_trip", "quick", check_round_trip),
    ("legendre_duality", "quick", check_duality),
    ("hessian_identity", "quick", check_hessian),
    ("wirtinger_identities", "quick", check_wirtinger),
    ("coexistence_endpoints", "quick", check_coexistence),
    ("amoeba_crossing", "quick", check_crossing),
    ("tangent_identity", "quick", check_tangent_identity),
    ("surface_gradient", "quick", check_gradient),
    ("frozen_tangency", "quick", check_tangency),
    ("transfer_commutation", "quick", check_transfer_commutation),
    ("polynomial_identity", "quick", check_apoly),
    ("partition_function_oracles", "quick", check_oracles),
    ("mcmc_exact_region", "quick", check_mcmc_exact),
    ("finite_size_convergence", "full", check_finite_size),
    ("mcmc_limit_shape", "full", check_mcmc_limit_shape),
]


def run_invariants(domain: FundamentalDomain, level: str = "quick",
                   seed: Optional[int] = None) -> List[InvariantResult]:
    """
    Run the verification suite on one domain.

    A check that raises a library error is reported as failed with the error
    message as detail.

    Raises:
        ValueError: If level is not "quick" or "full".
    """
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}")
    full = level == "full"
    seed = get_default_seed() if seed is None else seed
    results = []
    for k, (name, check_level, check) in enumerate(SUITE):
        if check_level == "full" and not full:
            continue
        rng = np.random.default_rng([seed, k])
        try:
            residual, tolerance, detail = check(domain, rng, full)
            passed = bool(np.isfinite(residual) and residual <= tolerance)
        except FiveVertexError as e:
            residual, tolerance, detail, passed = math.nan, math.nan, f"{type(e).__name__}: {e}", False
        results.append(InvariantResult(name=name, residual=float(residual), tolerance=float(tolerance),
                                       passed=passed, detail=detail))
        log = logger.info if passed else logger.warning
        log("%s: residual %.3e (tolerance %.1e) %s", name, residual, tolerance,
            "passed" if passed else "FAILED")
    return results


def write_report(results: List[InvariantResult], path: Path, domain: FundamentalDomain,
                 level: str) -> Path:
    """JSON report with every result and the overall verdict."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report = {
        "domain": domain.as_dict(),
        "level": level,
        "passed": all(r.passed for r in results),
        "failures": [r.name for r in results if not r.passed],
        "results": [r.as_dict() for r in results],
    }
    path.write_text(json.dumps(report, indent=2, allow_nan=True) + "\n", encoding="utf-8")
    return path
