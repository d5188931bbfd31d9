"""
Unit tests for the phase_diagram module.
"""

import numpy as np
import pytest

from fivevertex.conformal import fields_from_u
from fivevertex.errors import InvalidArgumentError
from fivevertex.model_core import build_domain
from fivevertex.models import AmoebaFlag, FieldPoint, Phase
from fivevertex.phase_diagram import (
    amoeba_boundary,
    breakpoints,
    classify_phase,
    crossing_check,
    real_axis_cover,
    tentacles,
)
from fivevertex.thermodynamics import surface_tension_boundary


@pytest.fixture
def small_domain():
    return build_domain([0.2, 0.9], [0.2, 0.9])


@pytest.fixture
def large_domain():
    return build_domain([2, 1.25], [2, 1.25])


def distance_to_polyline(points, P):
    """Minimum distance from each row of points to the polyline through P."""
    a, b = P[:-1], P[1:]
    d = b - a
    length2 = np.maximum(np.sum(d * d, axis=1), 1e-300)
    rel = points[:, None, :] - a[None, :, :]
    lam = np.clip(np.sum(rel * d[None], axis=2) / length2, 0, 1)
    closest = a[None] + lam[..., None] * d[None]
    return np.min(np.linalg.norm(points[:, None, :] - closest, axis=2), axis=1)


class TestRealAxisCover:
    """Tests for breakpoints and real_axis_cover."""

    def test_breakpoints(self, small_domain):
        """Test the divergence candidates are sorted and distinct."""
        bps = breakpoints(small_domain)
        expected = sorted({-0.04, -0.81, -25.0, -1 / 0.81, 0.0})
        assert np.allclose(bps, expected)

    def test_cover_increasing(self, small_domain):
        """Test the cover is increasing and avoids the breakpoints."""
        x = real_axis_cover(small_domain, 1000)
        assert np.all(np.diff(x) >= 0)
        assert np.min(np.abs(x[:, None] - breakpoints(small_domain)[None, :])) > 0


class TestAmoebaBoundary:
    """Tests for amoeba_boundary."""

    def test_symmetric_for_equal_weights(self, small_domain, large_domain):
        """Test X(u) = Y(1/conj(u)) and the traced curve is symmetric under X <-> Y."""
        rng = np.random.default_rng(0)
        u = rng.uniform(0.1, 3, 20) * np.exp(1j * rng.uniform(0.2, 3.0, 20))
        for domain in (small_domain, large_domain):
            X, _ = fields_from_u(u, domain)
            _, Y = fields_from_u(1 / np.conj(u), domain)
            assert np.allclose(X, Y, atol=1e-12)

            trace = amoeba_boundary(domain, n_samples=4000)
            P = np.array([[s.X, s.Y] for s in trace.samples if s.flag is AmoebaFlag.REGULAR])
            window = np.all(np.abs(P) < 5, axis=1)
            mirrored = P[window][:, ::-1]
            assert np.max(distance_to_polyline(mirrored, P)) < 0.05

    def test_flags(self, small_domain):
        """Test capped samples are clipped to the cap."""
        trace = amoeba_boundary(small_domain, epsilon=1e-2, n_samples=500, cap=5.0)
        flags = {s.flag for s in trace.samples}
        assert AmoebaFlag.CAPPED in flags and AmoebaFlag.REGULAR in flags
        for s in trace.samples:
            assert abs(s.X) <= 5.0 and abs(s.Y) <= 5.0

    @pytest.mark.parametrize("epsilon", [0.0, -1e-3, 0.2])
    def test_bad_epsilon(self, small_domain, epsilon):
        """Test epsilon outside (0, 0.1] is rejected."""
        with pytest.raises(InvalidArgumentError):
            amoeba_boundary(small_domain, epsilon=epsilon)

    def test_bad_sample_count(self, small_domain):
        """Test fewer than 100 samples is rejected."""
        with pytest.raises(InvalidArgumentError):
            amoeba_boundary(small_domain, n_samples=50)


class TestTentacles:
    """Tests for tentacles."""

    def test_small_r_count(self, small_domain):
        """Test four tentacles for the 2x2 small-r domain."""
        found = tentacles(small_domain)
        assert len(found) == 4
        assert all(np.isfinite(t.point) and t.point < 0 for t in found)

    def test_small_r_directions(self, small_domain):
        """Test -alpha^2 tentacles run to Y -> -inf and -1/beta^2 ones to X -> -inf."""
        for t in tentacles(small_domain):
            if "alpha" in t.label:
                assert t.direction[1] < -0.9
            else:
                assert t.direction[0] < -0.9

    def test_large_r_count(self, large_domain):
        """Test six tentacles for the 2x2 large-r domain, including 0 and infinity."""
        found = tentacles(large_domain)
        assert len(found) == 6
        labels = {t.label for t in found}
        assert "u=0" in labels and "u=inf" in labels


class TestClassifyPhase:
    """Tests for classify_phase."""

    def test_deep_frozen(self, small_domain, large_domain):
        """Test (-10, -10) is the empty frozen phase."""
        for domain in (small_domain, large_domain):
            result = classify_phase(FieldPoint(-10, -10), domain)
            assert result.phase is Phase.FROZEN
            assert result.slope.as_tuple() == (0, 0)

    def test_zigzag(self, large_domain):
        """Test large positive X = Y freezes at (1/2, 1/2) for large r."""
        result = classify_phase(FieldPoint(20, 20), large_domain)
        assert result.phase is Phase.FROZEN
        assert result.slope.as_tuple() == (0.5, 0.5)

    def test_semi_frozen(self, small_domain):
        """Test a point between the two left tentacles freezes at (0, 1/2)."""
        result = classify_phase(FieldPoint(-10, -0.28), small_domain)
        assert result.phase is Phase.FROZEN
        assert result.slope.as_tuple() == (0, 0.5)

    def test_tie_is_boundary(self, small_domain):
        """Test the (0, 0) / (0, 1/2) tie line is reported as a boundary."""
        Y = 2 * (surface_tension_boundary(0, 0.5, small_domain) - surface_tension_boundary(0, 0, small_domain))
        assert Y == pytest.approx(-0.5502, abs=1e-4)
        result = classify_phase(FieldPoint(-25, Y), small_domain)
        assert result.phase is Phase.BOUNDARY
        assert {p.as_tuple() for p in result.tied} == {(0, 0), (0, 0.5)}

    def test_disordered(self, small_domain):
        """Test the image of an interior u is disordered with the slope of u."""
        u = 0.3 + 0.7j
        X, Y = fields_from_u(u, small_domain)
        result = classify_phase(FieldPoint(float(X), float(Y)), small_domain)
        assert result.phase is Phase.DISORDERED
        assert abs(result.u - u) < 1e-6


class TestCrossingCheck:
    """Tests for crossing_check."""

    @pytest.mark.parametrize("alphas,betas", [([0.5], [1.0]), ([2.0], [1.0])])
    def test_flips(self, alphas, betas):
        """Test classification flips across the traced boundary."""
        domain = build_domain(alphas, betas)
        trace = amoeba_boundary(domain, n_samples=2000)
        tested, failures = crossing_check(domain, trace, n_checks=8)
        assert tested > 0
        assert failures == 0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
