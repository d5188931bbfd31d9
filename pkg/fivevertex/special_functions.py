"""
Complex dilogarithm and the B-function.

Both functions use the principal branch of the logarithm. Points on the cut
[1, inf) are evaluated as the limit from the upper half-plane. Inputs may be
Python scalars or numpy arrays.
"""

import logging
from typing import Union

import numpy as np
from scipy.integrate import quad
from scipy.special import bernoulli, factorial

from .config import DILOG_SERIES_TERMS, QUAD_EPSABS, QUAD_EPSREL, QUAD_LIMIT
from .errors import InvalidArgumentError, SingularArgumentError

logger = logging.getLogger(__name__)

ArrayLike = Union[complex, float, np.ndarray]

PI2_6 = np.pi ** 2 / 6.0

# Li2(z) = sum_n B_n u^(n+1) / (n+1)!  with u = -log(1 - z), valid for |u| < 2 pi.
# scipy's bernoulli() uses B_1 = -1/2, which is the convention this series needs.
_SERIES = bernoulli(DILOG_SERIES_TERMS) / factorial(np.arange(1, DILOG_SERIES_TERMS + 2))


def _as_complex_array(z: ArrayLike) -> np.ndarray:
    arr = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"non-finite argument: {z!r}")
    # -0.0 imaginary parts would put real inputs on the lower side of the cut
    return arr.real + (arr.imag + 0.0) * 1j


def _series(z: np.ndarray) -> np.ndarray:
    u = -np.log1p(-z)
    return u * np.polynomial.polynomial.polyval(u, _SERIES)


def _dilog_disk(z: np.ndarray) -> np.ndarray:
    """Li2 on the closed unit disk."""
    out = np.empty_like(z)
    left = z.real <= 0.5
    out[left] = _series(z[left])

    right = ~left
    zr = z[right]
    at_one = zr == 1
    safe = np.where(at_one, 0.5, zr)
    reflected = PI2_6 - np.log(safe) * np.log1p(-safe) - _series(1.0 - safe)
    out[right] = np.where(at_one, PI2_6, reflected)
    return out


def _dilog_array(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    inside = np.abs(z) <= 1.0
    out[inside] = _dilog_disk(z[inside])

    outside = ~inside
    zo = z[outside]
    on_cut = (zo.imag == 0) & (zo.real > 1.0)

    inverse = _dilog_disk(1.0 / zo)
    general = -inverse - PI2_6 - 0.5 * np.log(-zo) ** 2

    x = np.where(on_cut, zo.real, 2.0)
    log_x = np.log(x)
    cut_value = (np.pi ** 2 / 3.0 - 0.5 * log_x ** 2 - inverse.real) + 1j * np.pi * log_x

    out[outside] = np.where(on_cut, cut_value, general)
    return out


def dilog(z: ArrayLike) -> ArrayLike:
    """
    Principal-branch dilogarithm Li2(z) = -int_0^z log(1 - t) dt / t.

    Args:
        z: Complex scalar or array. Real points above 1 are taken as the limit
            from the upper half-plane.

    Returns:
        Complex scalar for scalar input, array otherwise.

    Raises:
        InvalidArgumentError: If any input is NaN or infinite.
    """
    arr = _as_complex_array(z)
    result = _dilog_array(arr.ravel()).reshape(arr.shape)
    if result.ndim == 0:
        return complex(result)
    return result


def bfunc(z: ArrayLike) -> ArrayLike:
    """
    B(z) = (arg(z) log|1 - z| + Im Li2(z)) / pi.

    B is odd under conjugation, equals log(x) for real x > 1 and log(1 + x)
    at -x for x > 0.

    Raises:
        SingularArgumentError: At z = 0 or z = 1.
        InvalidArgumentError: For non-finite input.
    """
    arr = _as_complex_array(z)
    if np.any((arr == 0) | (arr == 1)):
        raise SingularArgumentError(f"B is singular at 0 and 1, got {z!r}")
    flat = arr.ravel()
    value = (np.angle(flat) * np.log(np.abs(1.0 - flat)) + _dilog_array(flat).imag) / np.pi
    value = value.reshape(arr.shape)
    if value.ndim == 0:
        return float(value)
    return value


def dilog_quadrature(z: complex) -> complex:
    """Independent Li2 oracle: -int_0^1 log(1 - s z) / s ds by adaptive quadrature."""
    z = complex(z)
    if not np.isfinite(z):
        raise InvalidArgumentError(f"non-finite argument: {z!r}")

    def integrand(s: float, imaginary: bool) -> float:
        val = np.log1p(-s * z) / s
        return val.imag if imaginary else val.real

    points = None
    if abs(z) > 1.0:
        points = [1.0 / abs(z)]
    kwargs = dict(epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, points=points)
    re, re_err = quad(integrand, 0.0, 1.0, args=(False,), **kwargs)
    im, im_err = quad(integrand, 0.0, 1.0, args=(True,), **kwargs)
    logger.debug("quadrature Li2(%s): errors %.1e, %.1e", z, re_err, im_err)
    return complex(-re, -im)
