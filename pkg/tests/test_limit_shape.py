"""
Unit tests for the limit_shape module.

Covers the built-in boundary data, the envelope solve, frozen boundaries with
their tangency points, and the lattice boundary heights used for sampling.
"""

import numpy as np
import pytest

from fivevertex.errors import DomainError, ParameterError, RegimeError
from fivevertex.limit_shape import (
    analytic_heights,
    builtin_G,
    envelope_contact_residual,
    envelope_point,
    frozen_boundary,
    gradient_residual,
    harmonic_value,
    holomorphy_residual,
    limit_shape_mesh,
    polar_grid,
    semi_boxed_large_r_heights,
    small_r_parameter_interval,
    tangency_points,
    tangent_identity_residual,
)
from fivevertex.model_core import build_domain
from fivevertex.models import HarmonicBoundaryData, MeshFlag


@pytest.fixture
def large_domain():
    return build_domain([2, 1.25], [2, 1.25])


@pytest.fixture
def small_domain():
    return build_domain([0.8, 0.25], [0.8, 0.25])


@pytest.fixture
def large_G(large_domain):
    return builtin_G("semi_boxed_large_r", large_domain)


@pytest.fixture
def small_G(small_domain):
    return builtin_G("semi_boxed_small_r", small_domain, a=-4.0)


INTERIOR = [0.5 + 1j, -1 + 0.5j, 2 + 3j, -0.3 + 0.2j]


class TestBuiltinG:
    """Tests for builtin_G and the harmonic extension."""

    def test_large_r_steps(self, large_G):
        """Test G = -pi on u > 0 and 0 on u < 0."""
        assert large_G.step_value(1.0) == pytest.approx(-np.pi)
        assert large_G.step_value(-1.0) == 0.0

    def test_large_r_extension(self, large_G):
        """Test G(u) = -pi + arg u, so G(i) = -pi/2."""
        assert harmonic_value(large_G, 1j) == pytest.approx(-np.pi / 2)
        u = -2 + 0.7j
        assert harmonic_value(large_G, u) == pytest.approx(-np.pi + np.angle(u))

    def test_small_r_steps(self, small_G):
        """Test pi on [a, -alpha_max^2], pi/2 up to -alpha_min^2 and 0 elsewhere."""
        assert small_G.step_value(-2.0) == pytest.approx(np.pi)
        assert small_G.step_value(-0.3) == pytest.approx(np.pi / 2)
        for x in (-10.0, -0.01, 1.0):
            assert small_G.step_value(x) == 0.0

    def test_small_r_closed_form(self, small_G):
        """Test the extension equals arg(sqrt((u + a1^2)(u + a2^2))/(u - a))."""
        for u in INTERIOR:
            closed = 0.5 * (np.angle(u + 0.64) + np.angle(u + 0.0625)) - np.angle(u + 4.0)
            assert small_G.value(u) == pytest.approx(closed, abs=1e-12)

    def test_parameter_interval(self, small_domain):
        """Test a must lie strictly inside (-1/beta_min^2, -alpha_max^2)."""
        lo, hi = small_r_parameter_interval(small_domain)
        assert (lo, hi) == pytest.approx((-16.0, -0.64))
        for a in (-20.0, -16.0, -0.5):
            with pytest.raises(ParameterError):
                builtin_G("semi_boxed_small_r", small_domain, a=a)

    def test_regime_mismatch(self, small_domain, large_domain):
        """Test each example rejects the other regime."""
        with pytest.raises(RegimeError):
            builtin_G("semi_boxed_large_r", small_domain)
        with pytest.raises(RegimeError):
            builtin_G("semi_boxed_small_r", large_domain)

    def test_unknown_name(self, large_domain):
        """Test unknown example names are rejected."""
        with pytest.raises(ParameterError):
            builtin_G("boxed", large_domain)

    def test_lower_half_plane(self, large_G):
        """Test the extension is only evaluated in the upper half-plane."""
        with pytest.raises(DomainError):
            harmonic_value(large_G, 1.0)


class TestEnvelopePoint:
    """Tests for envelope_point."""

    def test_zero_G_is_cone_vertex(self, small_domain, large_domain):
        """Test G = 0 gives (x, y, h) = (0, 0, 0)."""
        G = HarmonicBoundaryData(left_value=0.0, breakpoints=(), values=())
        for domain in (small_domain, large_domain):
            for u in INTERIOR:
                p = envelope_point(u, G, domain)
                assert abs(p.x) < 1e-12 and abs(p.y) < 1e-12 and abs(p.h) < 1e-12

    def test_tangent_identity(self, small_domain, small_G, large_domain, large_G):
        """Test h = s x + t y + G/theta on both meshes."""
        for domain, G in ((small_domain, small_G), (large_domain, large_G)):
            mesh = limit_shape_mesh(G, domain, polar_grid(20, 20, 1e-2, 1e2))
            for p in mesh:
                if p.flag is MeshFlag.OK:
                    assert tangent_identity_residual(p, G) <= 1e-10 * max(1.0, abs(p.h))

    def test_slopes_in_triangle(self, large_domain, large_G):
        """Test every mesh slope lies in the closed triangle."""
        for p in limit_shape_mesh(large_G, large_domain, polar_grid(15, 15)):
            if p.flag is not MeshFlag.OK:
                continue
            assert p.s >= 0 and p.t >= 0 and p.s + p.t <= 1

    def test_large_r_inside_region(self, large_domain, large_G):
        """Test the large-r shape stays in {x > 0, y > 0, |x - y| < 1}."""
        for p in limit_shape_mesh(large_G, large_domain, polar_grid(30, 30)):
            if p.flag is not MeshFlag.OK:
                continue
            assert p.x > -1e-6 and p.y > -1e-6
            assert abs(p.x - p.y) < 1 + 1e-6

    def test_gradient(self, small_domain, small_G, large_domain, large_G):
        """Test the plane-fit gradient of the surface equals (s, t)."""
        for domain, G in ((small_domain, small_G), (large_domain, large_G)):
            for u in INTERIOR:
                assert gradient_residual(u, G, domain) <= 1e-3

    def test_holomorphy(self, small_domain, small_G, large_domain, large_G):
        """Test the four derivative functions satisfy Cauchy-Riemann."""
        for domain, G in ((small_domain, small_G), (large_domain, large_G)):
            for u in INTERIOR:
                assert holomorphy_residual(u, G, domain) <= 1e-8

    def test_second_order_contact(self, large_domain, large_G):
        """Test the deviation from the tangent plane scales like distance squared."""
        for u in INTERIOR:
            r1 = envelope_contact_residual(u, large_G, large_domain, radius=1e-3)
            r2 = envelope_contact_residual(u, large_G, large_domain, radius=1e-4)
            assert np.isfinite(r1) and np.isfinite(r2)
            assert abs(r1 - r2) <= 0.1 * max(r1, r2) + 1e-6

    def test_lower_half_plane(self, large_domain, large_G):
        """Test Im u <= 0 is rejected."""
        with pytest.raises(DomainError):
            envelope_point(1 - 1j, large_G, large_domain)


class TestFrozenBoundary:
    """Tests for frozen_boundary and tangency_points."""

    def test_small_r_tangencies(self, small_domain, small_G):
        """Test x = 1 at u = -alpha_i^2 and y = 0 at u = -1/beta_j^2."""
        points = tangency_points(small_G, small_domain)
        x_one = sorted(p.u for p in points if p.line == "x=1")
        y_zero = sorted(p.u for p in points if p.line == "y=0")
        assert x_one == pytest.approx([-0.64, -0.0625])
        assert y_zero == pytest.approx([-16.0, -1.5625])
        for p in points:
            if p.line == "x=1":
                assert p.x == pytest.approx(1.0, abs=1e-4)
            else:
                assert p.y == pytest.approx(0.0, abs=1e-4)

    def test_small_r_polyline_touches(self, small_domain, small_G):
        """Test the traced boundary comes close to the lines x = 1 and y = 0."""
        boundary = frozen_boundary(small_G, small_domain, n_samples=3000)
        pts = np.vstack(boundary.segments())
        assert np.min(np.abs(pts[:, 0] - 1.0)) < 1e-2
        assert np.min(np.abs(pts[:, 1])) < 1e-2

    def test_large_r_tangencies(self, large_domain, large_G):
        """Test the large-r shape touches x - y = 1 and x - y = -1."""
        points = {p.line: p for p in tangency_points(large_G, large_domain)}
        assert points["x-y=1"].x - points["x-y=1"].y == pytest.approx(1.0, abs=1e-4)
        assert points["x-y=-1"].x - points["x-y=-1"].y == pytest.approx(-1.0, abs=1e-4)

    def test_large_r_bounded(self, large_domain, large_G):
        """Test the large-r liquid region is bounded."""
        boundary = frozen_boundary(large_G, large_domain, n_samples=1000)
        segments = boundary.segments()
        assert segments
        pts = np.vstack(segments)
        assert np.all(np.isfinite(pts))
        assert np.max(np.abs(pts)) < 50.0


class TestLatticeBoundary:
    """Tests for semi_boxed_large_r_heights and analytic_heights."""

    def test_region_shape(self):
        """Test frozen values on the axes, the strips and past the cut."""
        region = semi_boxed_large_r_heights(4, depth=16)
        H = region.heights
        assert H[0, :].max() == 0 and H[:, 0].max() == 0
        assert H[9, 3] == 3          # a - b >= L: h = b
        assert H[2, 7] == 2          # b - a >= L: h = a
        assert H[9, 9] == 7          # floor((18 - 4)/2)
        assert not region.free[9, 3] and region.free[3, 3]
        assert not region.free[8, 8]

    def test_free_count(self):
        """Test the free faces are those with 0 < a, b, |a - b| < L and a + b < depth."""
        L, depth = 3, 10
        region = semi_boxed_large_r_heights(L, depth)
        expected = sum(1 for a in range(1, depth) for b in range(1, depth)
                       if abs(a - b) < L and a + b < depth)
        assert region.n_free == expected

    def test_bad_size(self):
        """Test L must be positive."""
        with pytest.raises(ParameterError):
            semi_boxed_large_r_heights(0)

    def test_interpolation_at_nodes(self, large_domain, large_G):
        """Test interpolated heights reproduce mesh heights at mesh nodes."""
        mesh = limit_shape_mesh(large_G, large_domain, polar_grid(20, 20, 1e-2, 1e2))
        ok = [p for p in mesh if p.flag is MeshFlag.OK][::37]
        xs = np.array([p.x for p in ok])
        ys = np.array([p.y for p in ok])
        h = analytic_heights(mesh, xs, ys)
        finite = np.isfinite(h)
        assert finite.any()
        assert np.allclose(h[finite], np.array([p.h for p in ok])[finite], atol=1e-8)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
