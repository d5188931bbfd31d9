"""
Unit tests for the thermodynamics module.

Tests surface tension, free energy, Legendre duality, the coexistence curve
and the Hessian identity.
"""

import warnings

import numpy as np
import pytest

from fivevertex import thermodynamics
from fivevertex.conformal import fields_from_u, slopes_from_u, u_from_fields
from fivevertex.errors import BoundaryProximityWarning, DomainError, RegimeError, StencilError
from fivevertex.model_core import build_domain
from fivevertex.models import FieldPoint, Phase, SlopePoint
from fivevertex.thermodynamics import (
    boundary_kinks,
    coexistence_boundary,
    duality_residual,
    free_energy,
    free_energy_conformal,
    free_energy_search,
    frozen_candidates,
    hessian_identity,
    intrinsic_metric,
    legendre_free_energy,
    sigma_from_u,
    simple_free_energy_large_r,
    simple_surface_tension_small_r,
    surface_tension,
    surface_tension_boundary,
)


@pytest.fixture
def small_domain():
    return build_domain([0.2, 0.9], [0.2, 0.9])


@pytest.fixture
def large_domain():
    return build_domain([2, 1.25], [2, 1.25])


def random_upper(seed, n, rmin=0.05, rmax=20.0):
    rng = np.random.default_rng(seed)
    radius = 10 ** rng.uniform(np.log10(rmin), np.log10(rmax), n)
    angle = rng.uniform(0.15, np.pi - 0.15, n)
    return radius * np.exp(1j * angle)


class TestSurfaceTension:
    """Tests for surface_tension."""

    def test_zero_in_coexistence(self, small_domain):
        """Test sigma vanishes at (0.45, 0.45) and across the coexistence region."""
        assert surface_tension(SlopePoint(0.45, 0.45), small_domain) == 0.0
        rng = np.random.default_rng(0)
        for _ in range(100):
            c = coexistence_boundary(small_domain, float(10 ** rng.uniform(-2, 2)))
            lam = rng.uniform(0.01, 1.0)
            p = SlopePoint(c.s, c.t + lam * (1 - c.s - c.t))
            assert surface_tension(p, small_domain) == 0.0

    def test_simply_periodic_small_r(self):
        """Test the double sum against the m1 = m2 = 1 closed form at 20 points."""
        domain = build_domain([0.5], [1.0])
        for u in random_upper(1, 20):
            w = u / (u + 0.25)
            s, t, sigma = simple_surface_tension_small_r(w, 0.5)
            assert surface_tension(SlopePoint(s, t), domain) == pytest.approx(sigma, abs=1e-9)

    def test_row_column_symmetry(self, small_domain, large_domain):
        """Test sigma_{a,b}(s, t) = sigma_{b,a}(t, s)."""
        for domain in (build_domain([0.2, 0.9], [0.5]), build_domain([2, 1.25], [3.0])):
            for u in random_upper(2, 10):
                s, t = slopes_from_u(u, domain)
                lhs = surface_tension(SlopePoint(float(s), float(t)), domain)
                rhs = surface_tension(SlopePoint(float(t), float(s)), domain.swapped())
                assert abs(lhs - rhs) <= 1e-10

    def test_positive_in_pure_phase(self, small_domain):
        """Test sigma > 0 strictly inside the small-r pure phase."""
        sigma, _, _ = sigma_from_u(random_upper(3, 50), small_domain)
        assert np.all(sigma > 0)

    def test_convex_along_segments(self, large_domain):
        """Test nonnegative second differences along random segments."""
        rng = np.random.default_rng(4)
        for _ in range(5):
            p = rng.dirichlet([1, 1, 1])[:2] * 0.9 + 0.03
            q = rng.dirichlet([1, 1, 1])[:2] * 0.9 + 0.03
            lam = np.linspace(0, 1, 11)
            vals = [surface_tension(SlopePoint(*(p + l * (q - p))), large_domain) for l in lam]
            assert np.all(np.diff(vals, 2) >= -1e-9)

    def test_outside_triangle(self, small_domain):
        """Test slopes outside the triangle raise a domain error."""
        with pytest.raises(DomainError):
            surface_tension(SlopePoint(0.7, 0.5), small_domain)


class TestBoundaryValues:
    """Tests for the exact boundary values of sigma."""

    def test_corner(self, small_domain, large_domain):
        """Test sigma(0, 0) = -mean log|1 - r^2|."""
        for domain in (small_domain, large_domain):
            expected = -np.log(np.abs(1 - domain.products ** 2)).mean()
            assert surface_tension_boundary(0, 0, domain) == pytest.approx(expected, rel=1e-14)

    def test_semi_frozen_row(self, small_domain):
        """Test sigma(0, 1/2) keeps the cheaper row empty."""
        assert surface_tension_boundary(0, 0.5, small_domain) == pytest.approx(0.0086345, abs=1e-6)

    def test_zigzag(self, large_domain):
        """Test sigma(1/2, 1/2) = -mean log r for large r and 0 for small r."""
        expected = -np.log(large_domain.products).mean()
        assert surface_tension_boundary(0.5, 0.5, large_domain) == pytest.approx(expected)
        assert surface_tension_boundary(0.3, 0.7, build_domain([0.5], [1.0])) == 0.0

    def test_radial_limit(self):
        """Test interior values approach the edge value as t -> 0."""
        domain = build_domain([0.5], [1.0])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryProximityWarning)
            inner = surface_tension(SlopePoint(0.3, 1e-5), domain)
        assert inner == pytest.approx(surface_tension_boundary(0.3, 0.0, domain), abs=5e-3)

    def test_kinks(self, small_domain):
        """Test the axis kinks at (1/2, 0) and (0, 1/2)."""
        kinks = {p.as_tuple() for p in boundary_kinks(small_domain)}
        assert kinks == {(0.5, 0.0), (0.0, 0.5)}
        assert boundary_kinks(build_domain([0.5], [1.0])) == []

    def test_candidates(self, small_domain, large_domain):
        """Test the frozen candidate slope sets."""
        small = {p.as_tuple() for p in frozen_candidates(small_domain)}
        assert small == {(0, 0), (1, 0), (0, 1), (0.5, 0), (0, 0.5)}
        large = {p.as_tuple() for p in frozen_candidates(large_domain)}
        assert large == small | {(0.5, 0.5)}


class TestFreeEnergy:
    """Tests for free_energy_conformal and free_energy."""

    @pytest.mark.parametrize("which", ["small", "large"])
    def test_duality(self, which, small_domain, large_domain):
        """Test d sigma = X ds + Y dt at 100 random u."""
        domain = small_domain if which == "small" else large_domain
        for u in random_upper(5, 100):
            assert duality_residual(u, domain) <= 1e-6

    def test_duality_detects_shifted_fields(self, small_domain, large_domain, monkeypatch):
        """Test fields that are not the gradient of sigma give a large residual."""
        def shifted(u, domain):
            X, Y = fields_from_u(u, domain)
            return X + 0.1, Y

        monkeypatch.setattr(thermodynamics, "fields_from_u", shifted)
        for domain in (small_domain, large_domain):
            assert duality_residual(0.3 + 0.7j, domain) > 1e-3

    def test_duality_near_real_axis(self, small_domain):
        """Test u closer to the real axis than the stencil is rejected."""
        with pytest.raises(DomainError):
            duality_residual(1.0 + 1e-7j, small_domain)

    def test_simply_periodic_large_r(self):
        """Test F against the single-weight large-r closed form at 20 points."""
        domain = build_domain([2.0], [1.0])
        for u in random_upper(6, 20):
            w = u / (u + 4.0)
            s, t, F_ref = simple_free_energy_large_r(w, 2.0)
            _, F = free_energy_conformal(u, domain)
            s2, t2 = slopes_from_u(u, domain)
            assert s == pytest.approx(float(s2), abs=1e-13)
            assert t == pytest.approx(float(t2), abs=1e-13)
            assert F == pytest.approx(F_ref, abs=1e-10)

    def test_legendre_inequality(self, small_domain, large_domain):
        """Test F(X, Y) >= sX + tY - sigma(s, t) for mismatched pairs."""
        us = random_upper(7, 30)
        for domain in (small_domain, large_domain):
            sigma, s, t = sigma_from_u(us, domain)
            X, Y = fields_from_u(us, domain)
            F = -sigma + s * X + t * Y
            for a in range(30):
                b = (a + 7) % 30
                assert F[a] >= s[b] * X[a] + t[b] * Y[a] - sigma[b] - 1e-10

    def test_deep_frozen(self, small_domain, large_domain):
        """Test F(-10, -10) = mean log|1 - r^2|."""
        for domain in (small_domain, large_domain):
            expected = np.log(np.abs(1 - domain.products ** 2)).mean()
            assert free_energy(FieldPoint(-10, -10), domain) == pytest.approx(expected, abs=1e-12)

    def test_large_X(self, small_domain, large_domain):
        """Test F - X -> 0 for very large X."""
        for domain in (small_domain, large_domain):
            assert free_energy(FieldPoint(40.0, 0.0), domain) - 40.0 == pytest.approx(0.0, abs=1e-12)

    def test_interior_matches_conformal(self, small_domain):
        """Test free_energy inside the amoeba equals the conformal value."""
        u = 0.3 + 0.7j
        fields, F_ref = free_energy_conformal(u, small_domain)
        u2 = u_from_fields(fields.X, fields.Y, small_domain)
        assert u2 is not None
        assert free_energy(fields, small_domain) == pytest.approx(F_ref, abs=1e-6)

    @pytest.mark.parametrize("which", ["small", "large"])
    def test_random_fields_finite(self, which, small_domain, large_domain):
        """Test free_energy returns a finite value at 100 random fields in [-4, 4]^2."""
        domain = small_domain if which == "small" else large_domain
        rng = np.random.default_rng(11)
        points = [tuple(p) for p in rng.uniform(-4, 4, (100, 2))]
        if which == "small":
            points += [(0.0946, 3.6037), (2.0281, 0.3051)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryProximityWarning)
            for X, Y in points:
                assert np.isfinite(free_energy(FieldPoint(X, Y), domain))

    @pytest.mark.parametrize("which", ["small", "large"])
    def test_not_below_legendre_sup(self, which, small_domain, large_domain):
        """Test F(X, Y) is never below the brute-force supremum at random fields."""
        domain = small_domain if which == "small" else large_domain
        rng = np.random.default_rng(12)
        points = [tuple(p) for p in rng.uniform(-3, 3, (15, 2))]
        if which == "large":
            points.append((1.2309, -0.5502))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryProximityWarning)
            for X, Y in points:
                fields = FieldPoint(X, Y)
                F = free_energy(fields, domain)
                brute = legendre_free_energy(fields, domain, n=150)
                assert brute <= F + 1e-9
                assert F - brute < 5e-2

    def test_frozen_only_when_no_interior_point_wins(self, large_domain):
        """Test fields with a disordered maximizer are not labelled frozen."""
        phase, slope, F, u, _ = free_energy_search(FieldPoint(1.2309, -0.5502), large_domain)
        assert u is not None
        assert phase in (Phase.DISORDERED, Phase.BOUNDARY)
        assert F >= legendre_free_energy(FieldPoint(1.2309, -0.5502), large_domain, n=300) - 1e-9

    def test_grid_legendre_sup(self, large_domain):
        """Test the brute-force grid supremum approaches F from below."""
        fields, F_ref = free_energy_conformal(-1 + 2j, large_domain)
        approx = legendre_free_energy(fields, large_domain, n=200)
        assert approx <= F_ref + 1e-9
        assert F_ref - approx < 1e-2


class TestCoexistence:
    """Tests for coexistence_boundary."""

    def test_reference_point(self, small_domain):
        """Test R = 1 gives (0.2429877, 0.2429877)."""
        p = coexistence_boundary(small_domain, 1.0)
        assert p.s == pytest.approx(0.2429877, abs=1e-6)
        assert p.t == pytest.approx(0.2429877, abs=1e-6)

    def test_endpoints(self, small_domain):
        """Test R -> 0 gives (1, 0) and R -> inf gives (0, 1)."""
        p = coexistence_boundary(small_domain, 1e-12)
        assert p.s == pytest.approx(1.0, abs=1e-9) and p.t == pytest.approx(0.0, abs=1e-9)
        p = coexistence_boundary(small_domain, 1e12)
        assert p.s == pytest.approx(0.0, abs=1e-9) and p.t == pytest.approx(1.0, abs=1e-9)

    def test_convex(self, small_domain):
        """Test the curve t(s) is convex on a 200-point log grid in R."""
        pts = [coexistence_boundary(small_domain, R) for R in np.geomspace(1e-4, 1e4, 200)]
        s = np.array([p.s for p in pts])[::-1]
        t = np.array([p.t for p in pts])[::-1]
        slopes = np.diff(t) / np.diff(s)
        assert np.all(np.diff(slopes) >= -1e-9)

    def test_large_r_rejected(self, large_domain):
        """Test large-r domains raise a regime error."""
        with pytest.raises(RegimeError):
            coexistence_boundary(large_domain, 1.0)


class TestHessian:
    """Tests for the trivial-potential identity sqrt(det H) = theta^2 / pi."""

    def test_small_r(self, small_domain):
        """Test the identity at u = i."""
        assert hessian_identity(1j, small_domain) <= 1e-3

    def test_large_r(self, large_domain):
        """Test the identity at u = -0.5 + 1.5i."""
        assert hessian_identity(-0.5 + 1.5j, large_domain) <= 1e-3

    def test_intrinsic_frame_is_scalar(self):
        """Test the Hessian pulled back to the u-plane has equal eigenvalues."""
        domain = build_domain([0.5], [1.0])
        for u in (0.5 + 1j, -1 + 0.7j):
            eig = np.linalg.eigvalsh(intrinsic_metric(u, domain))
            assert abs(eig[1] - eig[0]) <= 1e-3 * abs(eig[1])

    def test_stencil_error(self, small_domain):
        """Test a stencil crossing the coexistence curve raises."""
        with pytest.raises(StencilError):
            hessian_identity(1.0 + 1e-9j, small_domain)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
