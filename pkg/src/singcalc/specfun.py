"""Arbitrary-precision special functions.

Every public function takes the working precision explicitly as ``digits``
(decimal significant digits) and evaluates inside a local mpmath precision
context, so no caller ever depends on, or mutates, the global mpmath state.

The elementary special functions delegate to mpmath.  Derivatives of the
zeta function and the Stieltjes constants are obtained by central
differences at raised working precision, which keeps a single, analyzable
mechanism for every derivative order.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

import mpmath
from mpmath import mp, mpf

DEFAULT_DIGITS = 50
MIN_DIGITS = 16
MAX_STIELTJES_ORDER = 8


class PoleError(ValueError):
    """Raised when a function is evaluated at one of its poles."""


class UnsupportedOrderError(ValueError):
    """Raised when a requested derivative order lies outside the supported range."""


def check_digits(digits: int) -> int:
    digits = int(digits)
    if digits < MIN_DIGITS:
        raise ValueError(f"precision must be at least {MIN_DIGITS} digits, got {digits}")
    return digits


def to_mpf(x):
    """Convert an int, Fraction, str, float or mpf to an mpf at the ambient precision."""
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    if isinstance(x, mpf):
        return +x
    return mpf(x)


def to_fraction(x) -> Fraction:
    """Exact rational value of an int, Fraction, decimal string, float or mpf."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, mpf):
        sign, man, exp, _ = x._mpf_
        man, exp = int(man), int(exp)
        if sign:
            man = -man
        return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2 ** (-exp))
    raise TypeError(f"cannot convert {x!r} to a rational")


def _is_nonpositive_integer(x) -> bool:
    if isinstance(x, (int, Fraction)):
        return Fraction(x).denominator == 1 and x <= 0
    x = to_mpf(x)
    return x <= 0 and x == mpmath.floor(x)


def _rounded(value, digits: int):
    with mp.workdps(digits):
        return +value


def gamma(x, digits: int = DEFAULT_DIGITS):
    """Euler's gamma function."""
    if _is_nonpositive_integer(x):
        raise PoleError(f"gamma has a pole at {x}")
    with mp.workdps(digits + 10):
        value = mpmath.gamma(to_mpf(x))
    return _rounded(value, digits)


def recip_gamma(x, digits: int = DEFAULT_DIGITS):
    """1/Gamma(x), entire, exactly zero at the nonpositive integers."""
    if _is_nonpositive_integer(x):
        with mp.workdps(digits):
            return mpf(0)
    with mp.workdps(digits + 10):
        value = mpmath.rgamma(to_mpf(x))
    return _rounded(value, digits)


def loggamma(x, digits: int = DEFAULT_DIGITS):
    if _is_nonpositive_integer(x):
        raise PoleError(f"log-gamma has a pole at {x}")
    with mp.workdps(digits + 10):
        value = mpmath.loggamma(to_mpf(x))
    return _rounded(value, digits)


def digamma(x, digits: int = DEFAULT_DIGITS):
    """Logarithmic derivative of the gamma function."""
    if _is_nonpositive_integer(x):
        raise PoleError(f"digamma has a pole at {x}")
    with mp.workdps(digits + 10):
        value = mpmath.digamma(to_mpf(x))
    return _rounded(value, digits)


def euler_gamma(digits: int = DEFAULT_DIGITS):
    with mp.workdps(digits):
        return +mp.euler


def zeta(s, digits: int = DEFAULT_DIGITS):
    """Riemann zeta function on the real line, s != 1."""
    if to_fraction(s) == 1:
        raise PoleError("zeta has a pole at s = 1")
    with mp.workdps(digits + 10):
        value = mpmath.zeta(to_mpf(s))
    return _rounded(value, digits)


def zeta_via_functional_equation(s, digits: int = DEFAULT_DIGITS):
    """zeta(s) obtained from zeta(1 - s) by the reflection functional equation."""
    with mp.workdps(digits + 15):
        s = to_mpf(s)
        value = (
            2**s
            * mp.pi ** (s - 1)
            * mpmath.sin(mp.pi * s / 2)
            * mpmath.gamma(1 - s)
            * mpmath.zeta(1 - s)
        )
    return _rounded(value, digits)


def central_difference(f, x, order: int, digits: int):
    """order-th derivative of f at x by a symmetric difference quotient.

    ``f`` may return a scalar or a list (differentiated elementwise).

    ``f`` is called at the ambient (raised) precision.  The step h is chosen
    so that the O(h^2) truncation error sits below 10^(-digits-8); the
    working precision is raised by order*log10(1/h) to absorb cancellation.
    The point x itself is only sampled for even orders.
    """
    if order == 0:
        with mp.workdps(digits + 10):
            value = f(to_mpf(x))
        if isinstance(value, (list, tuple)):
            return [_rounded(v, digits) for v in value]
        return _rounded(value, digits)
    step_digits = digits // 2 + 6
    work = digits + order * (step_digits + 1) + 20
    with mp.workdps(work):
        x = to_mpf(x)
        h = mpf(10) ** (-step_digits)
        half = mpf(order) / 2
        total = None
        for k in range(order + 1):
            weight = (-1) ** k * comb(order, k)
            sample = f(x + (half - k) * h)
            if isinstance(sample, (list, tuple)):
                part = [weight * v for v in sample]
                total = part if total is None else [a + b for a, b in zip(total, part)]
            else:
                total = weight * sample if total is None else total + weight * sample
        scale = h**order
        value = [v / scale for v in total] if isinstance(total, list) else total / scale
    if isinstance(value, list):
        return [_rounded(v, digits) for v in value]
    return _rounded(value, digits)


def zeta_deriv(s, order: int, digits: int = DEFAULT_DIGITS):
    """order-th derivative of the Riemann zeta function at real s != 1."""
    if order < 1:
        raise UnsupportedOrderError("derivative order must be positive")
    if to_fraction(s) == 1:
        raise PoleError("zeta has a pole at s = 1")
    return central_difference(mpmath.zeta, s, order, digits)


def stieltjes(k: int, digits: int = DEFAULT_DIGITS):
    """Stieltjes constant A_k = (-1)^k/(k+1) * d^(k+1)/ds^(k+1) [(s-1) zeta(s)] at s = 1."""
    if k < 0 or k > MAX_STIELTJES_ORDER:
        raise UnsupportedOrderError(f"Stieltjes constants are supported for 0 <= k <= {MAX_STIELTJES_ORDER}")

    def regularized(s):
        # (s-1) zeta(s) has a removable singularity at s = 1 with value 1.
        if s == 1:
            return mpf(1)
        return (s - 1) * mpmath.zeta(s)

    d = central_difference(regularized, 1, k + 1, digits + 5)
    with mp.workdps(digits):
        return +((-1) ** k * d / (k + 1))


def rising(x, k: int, digits: int = DEFAULT_DIGITS):
    """Rising factorial (x)_k = x (x+1) ... (x+k-1); exact for rational x."""
    if k < 0:
        raise ValueError("rising factorial needs k >= 0")
    if isinstance(x, (int, Fraction)):
        out = Fraction(1)
        for j in range(k):
            out *= x + j
        return out
    with mp.workdps(digits + 5):
        out = mpf(1)
        x = to_mpf(x)
        for j in range(k):
            out *= x + j
    return _rounded(out, digits)
