"""
Special-function kernels for the Kerr-cavity moment formula.
"""

import cmath
import math

import numpy as np
from scipy import special

from shared.errors import ParameterError, PoleAtNonpositiveIntegerError, SeriesDidNotConvergeError

SERIES_RTOL = 1e-16
SERIES_SMALL_TERMS = 3
SERIES_MAX_TERMS = 100_000


def _check_pole(z: complex, name: str = "z") -> complex:
    z = complex(z)
    if not cmath.isfinite(z):
        raise ParameterError(f"{name} must be finite", value=str(z))
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise PoleAtNonpositiveIntegerError(f"{name} is a nonpositive integer", value=z.real)
    return z


def complex_gamma(z: complex) -> complex:
    """Gamma function for complex arguments."""
    z = _check_pole(z)
    return complex(special.gamma(z))


def complex_log_gamma(z: complex) -> complex:
    """Principal branch of log Gamma(z)."""
    z = _check_pole(z)
    return complex(special.loggamma(z))


def hyper_0f2(c: complex, d: complex, z: float) -> complex:
    """0F2(;c,d;z) = sum_n z^n / ((c)_n (d)_n n!).

    Terms are generated by the ratio recurrence; the sum stops once three
    consecutive terms fall below SERIES_RTOL relative to the partial sum.
    """
    c = _check_pole(c, "c")
    d = _check_pole(d, "d")
    z = float(z)
    if z < 0.0 or not math.isfinite(z):
        raise ParameterError("0F2 argument must be real and nonnegative", z=z)
    if z == 0.0:
        return 1.0 + 0j

    term = 1.0 + 0j
    total = term
    small = 0
    for n in range(SERIES_MAX_TERMS):
        term = term * z / ((c + n) * (d + n) * (n + 1))
        total += term
        if not np.isfinite(total):
            raise SeriesDidNotConvergeError("0F2 series overflowed", c=str(c), d=str(d), z=z, terms=n + 1)
        if abs(term) < SERIES_RTOL * abs(total):
            small += 1
            if small >= SERIES_SMALL_TERMS:
                return total
        else:
            small = 0
    raise SeriesDidNotConvergeError("0F2 series exceeded the term cap", c=str(c), d=str(d), z=z,
                                    terms=SERIES_MAX_TERMS)
