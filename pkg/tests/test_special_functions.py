"""
Unit tests for the special_functions module.

Tests the dilogarithm against its quadrature oracle and classical values,
and the odd symmetry and special values of B.
"""

import numpy as np
import pytest

from fivevertex.errors import InvalidArgumentError, SingularArgumentError
from fivevertex.special_functions import bfunc, dilog, dilog_quadrature

CATALAN = 0.915965594177219


@pytest.fixture
def upper_points():
    """Fixed 50-point test set in the upper half-plane."""
    rng = np.random.default_rng(7)
    radius = 10 ** rng.uniform(-2, 2, 50)
    angle = rng.uniform(0.05, np.pi - 0.05, 50)
    return radius * np.exp(1j * angle)


class TestDilogValues:
    """Tests for classical values of the dilogarithm."""

    def test_zero(self):
        """Test Li2(0) = 0."""
        assert dilog(0) == 0

    def test_one(self):
        """Test Li2(1) = pi^2/6."""
        assert abs(dilog(1.0) - np.pi ** 2 / 6) < 1e-12

    def test_i_gives_catalan(self):
        """Test Im Li2(i) is Catalan's constant and Re is -pi^2/48."""
        value = dilog(1j)
        assert abs(value.imag - CATALAN) < 1e-12
        assert abs(value.real + np.pi ** 2 / 48) < 1e-12

    def test_minus_one(self):
        """Test Li2(-1) = -pi^2/12."""
        assert abs(dilog(-1.0) + np.pi ** 2 / 12) < 1e-12

    def test_on_cut_limit_from_above(self):
        """Test Li2(2) = pi^2/4 + i pi log 2 on the cut."""
        value = dilog(2.0)
        assert abs(value.real - np.pi ** 2 / 4) < 1e-12
        assert abs(value.imag - np.pi * np.log(2)) < 1e-12

    def test_cut_matches_upper_side(self):
        """Test the on-cut value is continuous with points just above it."""
        above = dilog(5.0 + 1e-12j)
        assert abs(dilog(5.0) - above) < 1e-9

    def test_array_input(self):
        """Test vectorized evaluation keeps shape."""
        z = np.array([[0.1, 1j], [-3.0, 4 + 2j]])
        out = dilog(z)
        assert out.shape == (2, 2)
        assert abs(out[0, 1] - dilog(1j)) < 1e-15

    def test_non_finite_rejected(self):
        """Test NaN input raises an invalid-argument error."""
        with pytest.raises(InvalidArgumentError):
            dilog(complex(np.nan, 0))


class TestDilogOracle:
    """Tests comparing the series evaluation with adaptive quadrature."""

    def test_fifty_points(self, upper_points):
        """Test agreement with the quadrature oracle on the fixed set."""
        for z in upper_points:
            ref = dilog_quadrature(z)
            assert abs(dilog(z) - ref) <= 1e-9 * max(1.0, abs(ref))

    def test_quadrature_catalan(self):
        """Test the oracle itself reproduces Catalan's constant."""
        assert abs(dilog_quadrature(1j).imag - CATALAN) < 1e-10

    def test_reflection(self):
        """Test Li2(z) + Li2(1-z) = pi^2/6 - log z log(1-z) inside the disk."""
        rng = np.random.default_rng(3)
        for _ in range(40):
            z = 0.9 * rng.uniform(0.05, 1) * np.exp(1j * rng.uniform(0.05, np.pi - 0.05))
            lhs = dilog(z) + dilog(1 - z)
            rhs = np.pi ** 2 / 6 - np.log(z) * np.log(1 - z)
            assert abs(lhs - rhs) < 1e-10

    def test_inversion_large_modulus(self):
        """Test the inversion identity at |z| up to 1e6."""
        for z in [1e3 + 2e3j, -5e5 + 1j, 1e6j]:
            lhs = dilog(z) + dilog(1 / z)
            rhs = -np.pi ** 2 / 6 - 0.5 * np.log(-z) ** 2
            assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


class TestBFunc:
    """Tests for the B-function."""

    def test_half(self):
        """Test B(0.5) = 0."""
        assert abs(bfunc(0.5)) < 1e-15

    def test_i(self):
        """Test B(i) = ((pi/2) log sqrt 2 + Catalan) / pi."""
        expected = (np.pi / 2 * np.log(np.sqrt(2)) + CATALAN) / np.pi
        assert abs(bfunc(1j) - expected) < 1e-12
        assert abs(bfunc(1j) - 0.46485) < 1e-5

    def test_odd_under_conjugation(self, upper_points):
        """Test B(conj z) = -B(z)."""
        for z in upper_points:
            assert abs(bfunc(z) + bfunc(np.conj(z))) <= 1e-12

    def test_real_axis_values(self):
        """Test B(x) = log x for x > 1 and B(-x) = log(1 + x)."""
        assert abs(bfunc(3.0) - np.log(3.0)) < 1e-12
        assert abs(bfunc(-2.5) - np.log(3.5)) < 1e-12

    def test_negative_zero_imaginary_part(self):
        """Test a -0.0 imaginary part is treated as a real point."""
        assert bfunc(complex(3.0, -0.0)) == bfunc(3.0)

    @pytest.mark.parametrize("z", [0, 1, 0j, 1 + 0j])
    def test_singular_points(self, z):
        """Test B raises at 0 and 1."""
        with pytest.raises(SingularArgumentError):
            bfunc(z)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
