"""Convergent sums accelerated by their coefficient asymptotics.

A sum ``sum_{n>=n0} a_n`` is split at N: the head is summed exactly and the
tail is replaced by the termwise sum of a's asymptotic expansion, each term
``n^b log^k n`` summed in closed form through a derivative of the Hurwitz
zeta function,

    sum_{n>=N} n^b (log n)^k = (-1)^k zeta^(k)(-b, N).

The neglected remainder is of the order of ``N^(e+1) log^B N`` for an
expansion error ``O(n^e log^B n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import mpmath
from mpmath import mp, mpf

from .expansion import EXACT, SingularExpansion
from .specfun import DEFAULT_DIGITS, to_mpf
from .transfer import (
    CoeffAsymptotics,
    CoeffBound,
    expansion_coefficients,
    multiply,
    transfer,
)


def power_tail(npow, logpow: int, N: int, digits: int = DEFAULT_DIGITS):
    """sum_{n>=N} n^npow (log n)^logpow for npow < -1 and N >= 1."""
    npow = Fraction(npow)
    if npow >= -1:
        raise ValueError("the tail diverges unless npow < -1")
    if logpow < 0:
        raise ValueError("negative powers of log n are not summed here")
    with mp.workdps(digits + 10):
        value = (-1) ** logpow * mpmath.zeta(-to_mpf(npow), N, logpow)
    with mp.workdps(digits):
        return +value


def tail_sum(a: CoeffAsymptotics, N: int, digits: int | None = None):
    """(value, nominal error) of the termwise tail sum of a from N on."""
    digits = digits or a.digits
    with mp.workdps(digits + 10):
        total = mpf(0)
        for t in a.terms:
            total += to_mpf(t.coeff) * power_tail(t.npow, t.logpow, N, digits + 10)
        if a.error.exact:
            bound = mpf(0)
        else:
            e, B = to_mpf(a.error.npow), a.error.logpow
            bound = mpf(N) ** (e + 1) * mpmath.log(N) ** B / abs(e + 1)
    with mp.workdps(digits):
        return +total, +bound


def accelerated_sum(head_values, a: CoeffAsymptotics, start: int = 0, digits: int | None = None):
    """sum_{n>=start} x_n given x_start..x_{N-1} explicitly and the asymptotics a of x_n."""
    digits = digits or a.digits
    N = start + len(head_values)
    with mp.workdps(digits + 10):
        head = mpf(0)
        for x in head_values:
            head += to_mpf(x)
        tail, bound = tail_sum(a, N, digits + 10)
        value = head + tail
    with mp.workdps(digits):
        return +value, +bound


def shifted_power_asym(shift, power: int, depth: int, digits: int = DEFAULT_DIGITS) -> CoeffAsymptotics:
    """(n + shift)^-power = n^-power sum_k binom(-power, k) shift^k n^-k, to depth terms."""
    shift = Fraction(shift)
    terms = []
    binom = Fraction(1)
    for k in range(depth):
        terms.append((binom * shift**k, -power - k, 0))
        binom = binom * (-power - k) / (k + 1)
    error = CoeffBound(-power - depth, 0)
    if shift == 0:
        error = CoeffBound(None)
    return CoeffAsymptotics.from_terms(terms, error, digits=digits)


def weight_asym(shifts, depth: int, digits: int = DEFAULT_DIGITS) -> CoeffAsymptotics:
    """Asymptotics of prod_s 1/(n + s)."""
    out = CoeffAsymptotics.from_terms([(1, 0)], digits=digits)
    for s in shifts:
        out = multiply(out, shifted_power_asym(s, 1, depth, digits))
    return out


@dataclass(frozen=True)
class SeriesRule:
    """Integration constant from the Taylor coefficients of the integrand.

    ``int_0^1 [f - f_-] = sum_n ([z^n]f - [z^n]f_-)/(n+1)``, summed exactly up
    to ``terms`` and accelerated beyond by the transfer of ``f - f_-``.
    ``coefficients(N)`` must return the first N Taylor coefficients of f.
    When the expansion handed to ``integrate`` is shallow, a deeper
    ``asymptotics`` of [z^n]f can be supplied for the tail instead.
    """

    coefficients: Callable[[int], list]
    terms: int = 400
    depth: int = 8
    asymptotics: CoeffAsymptotics | None = None

    def regular_integral(self, f: SingularExpansion, minus, digits: int):
        N = self.terms
        work = digits + 10
        fm = SingularExpansion.from_terms(minus, EXACT, f.rho, work)
        minus_coeffs = expansion_coefficients(fm, N)
        coeffs = self.coefficients(N)
        rest = SingularExpansion.from_terms([t for t in f.terms if t.alpha > -1], f.error, f.rho, work)
        if self.asymptotics is None:
            rest_asym = transfer(rest, self.depth, work)
        else:
            # same precision on both sides so the divergent terms cancel exactly
            a = self.asymptotics
            rest_asym = a - transfer(fm.with_digits(a.digits), self.depth, a.digits)
        asym = multiply(rest_asym, weight_asym([1], self.depth, work))
        with mp.workdps(work):
            head = [(to_mpf(coeffs[n]) - to_mpf(minus_coeffs[n])) / (n + 1) for n in range(N)]
        value, _ = accelerated_sum(head, asym, 0, work)
        with mp.workdps(digits):
            return +value
