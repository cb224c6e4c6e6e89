"""Hadamard (coefficientwise) products of functions with singular expansions.

Two routes are provided.  :func:`power_hadamard` is the closed law for
``(1-z)^a (.) (1-z)^b``, whose coefficients ``(-a)_n (-b)_n / n!^2`` make the
product a Gauss hypergeometric function; its expansion at 1 splits into an
analytic family ``lambda_k (1-z)^k / k!`` and a singular family
``mu_k (1-z)^(a+b+1+k) / k!``.

:func:`zigzag` works for anything with known coefficient asymptotics:
multiply the asymptotics, rebuild a singular function with those
coefficients, then recover the hidden polynomial from Taylor values at 1 of
the difference, summed with tail acceleration.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, factorial

import mpmath
from mpmath import mp, mpf

from .expansion import (
    EXACT,
    ErrorBudget,
    SingularExpansion,
    add,
    differentiate,
)
from .oracle import SeriesProvider
from .specfun import DEFAULT_DIGITS, gamma, recip_gamma, rising, to_fraction, to_mpf
from .summation import accelerated_sum
from .transfer import (
    CoeffAsymptotics,
    expansion_coefficients,
    multiply,
    reconstruct,
    singular_coefficients,
    transfer,
)


class IntegerSumError(ValueError):
    """Raised when a + b is an integer: the closed law degenerates, use zigzag."""


class DivergenceError(ValueError):
    """Raised when a Taylor value at 1 is requested beyond the convergence range."""


# --------------------------------------------------------------------------
# the power law


def _is_int(x: Fraction) -> bool:
    return x.denominator == 1


def power_hadamard(a, b, K: int = 4, digits: int = DEFAULT_DIGITS) -> SingularExpansion:
    """Expansion at 1 of (1-z)^a (.) (1-z)^b with K+1 terms in each family.

    lambda_k = Gamma(1+a+b)/(Gamma(1+a)Gamma(1+b)) (-a)_k (-b)_k / (-a-b)_k
    mu_k = Gamma(-a-b-1)/(Gamma(-a)Gamma(-b)) (1+a)_k (1+b)_k / (2+a+b)_k
    each multiplying (1-z)^k/k! and (1-z)^(a+b+1+k)/k! respectively.
    """
    a, b = to_fraction(a), to_fraction(b)
    if _is_int(a):
        return _integer_power_hadamard(a, b, digits)
    if _is_int(b):
        return _integer_power_hadamard(b, a, digits)
    s = a + b
    if _is_int(s):
        raise IntegerSumError("a + b is an integer; the product carries logarithms, use zigzag")
    work = digits + 10
    with mp.workdps(work):
        lam0 = gamma(1 + s, work) * recip_gamma(1 + a, work) * recip_gamma(1 + b, work)
        mu0 = gamma(-s - 1, work) * recip_gamma(-a, work) * recip_gamma(-b, work)
        terms = []
        for k in range(K + 1):
            lam = lam0 * to_mpf(rising(-a, k) * rising(-b, k) / rising(-s, k))
            mu = mu0 * to_mpf(rising(1 + a, k) * rising(1 + b, k) / rising(2 + s, k))
            terms.append((lam / factorial(k), Fraction(k), 0))
            terms.append((mu / factorial(k), s + 1 + k, 0))
        error = ErrorBudget(min(Fraction(K + 1), s + 2 + K))
        out = SingularExpansion.from_terms(terms, error, digits=work)
    return _rounded_expansion(out, digits)


def _rounded_expansion(f: SingularExpansion, digits: int) -> SingularExpansion:
    with mp.workdps(digits):
        terms = [(+t.coeff if isinstance(t.coeff, mpf) else t.coeff, t.alpha, t.logpow) for t in f.terms]
    return SingularExpansion.from_terms(terms, f.error, f.rho, digits)


def _integer_power_hadamard(m: Fraction, b: Fraction, digits: int) -> SingularExpansion:
    """(1-z)^m (.) (1-z)^b for an integer m, exactly."""
    m = int(m)
    if m >= 0:
        # a polynomial: sum_{n<=m} binom(m,n)(-1)^n g_n z^n, re-expanded in u = 1-z
        g = singular_coefficients(b, 0, m + 1)
        poly = [Fraction((-1) ** n * _binom(m, n)) * g[n] for n in range(m + 1)]
        coeffs = [Fraction(0)] * (m + 1)
        for n, c in enumerate(poly):
            # z^n = (1-u)^n
            for j in range(n + 1):
                coeffs[j] += c * _binom(n, j) * (-1) ** j
        return SingularExpansion.from_terms([(c, j, 0) for j, c in enumerate(coeffs)], EXACT, digits=digits)
    # (1-z)^-m (.) g = (1/(m-1)!) d^(m-1)/dz^(m-1) [z^(m-1) g(z)]
    r = -m - 1
    zpow = [(Fraction(_binom(r, j) * (-1) ** j), b + j, 0) for j in range(r + 1)]
    inner = SingularExpansion.from_terms(zpow, EXACT, digits=digits)
    out = differentiate(inner, r)
    return SingularExpansion.from_terms(
        [(t.coeff / factorial(r), t.alpha, t.logpow) for t in out.terms], EXACT, digits=digits
    )


def _binom(n: int, k: int) -> int:
    return factorial(n) // (factorial(k) * factorial(n - k))


def hadamard_identity(f: SingularExpansion) -> SingularExpansion:
    """f (.) (1-z)^-1 = f: the all-ones series is the unit of the Hadamard product."""
    return f


# --------------------------------------------------------------------------
# error composition


@dataclass(frozen=True)
class HadamardError:
    """Shape of the product's expansion beyond the computed singular terms.

    ``taylor_degree`` is the degree of the polynomial that must be supplied
    from Taylor values at 1 (None when no polynomial is needed).
    """

    error: ErrorBudget
    taylor_degree: int | None


def error_hadamard(a_bound, b_bound) -> HadamardError:
    """Error of f (.) g from O((1-z)^a L^k) and O((1-z)^b L^l) for f and g.

    With s = a+b+1: s < 0 gives O((1-z)^s L^(k+l)); k < s < k+1 adds a Taylor
    polynomial of degree k; an integer s >= 0 adds one more power of L.
    """
    (a, k), (b, l) = ((to_fraction(x[0]), int(x[1])) if isinstance(x, tuple) else (x.aexp, x.logpow)
                      for x in (a_bound, b_bound))
    s = a + b + 1
    logs = k + l
    if s < 0:
        return HadamardError(ErrorBudget(s, logs), None)
    if _is_int(s):
        return HadamardError(ErrorBudget(s, logs + 1), int(s))
    return HadamardError(ErrorBudget(s, logs), int(s))


# --------------------------------------------------------------------------
# Taylor values at 1


def falling_factorial_asym(j: int, digits: int = DEFAULT_DIGITS) -> CoeffAsymptotics:
    """n(n-1)...(n-j+1) as an exact polynomial in n."""
    poly = [Fraction(1)]
    for i in range(j):
        nxt = [Fraction(0)] * (len(poly) + 1)
        for d, c in enumerate(poly):
            nxt[d + 1] += c
            nxt[d] -= i * c
        poly = nxt
    return CoeffAsymptotics.from_terms([(c, d, 0) for d, c in enumerate(poly) if c], digits=digits)


def _falling(n: int, j: int) -> int:
    out = 1
    for i in range(j):
        out *= n - i
    return out


def series_sum(values, asym: CoeffAsymptotics, j: int = 0, digits: int = DEFAULT_DIGITS):
    """sum_{n>=j} x_n n!/(n-j)! from x_0..x_{N-1} and the asymptotics of x_n."""
    weighted = multiply(asym, falling_factorial_asym(j, asym.digits))
    if weighted.terms and weighted.terms[0].npow >= -1:
        raise DivergenceError(f"the derivative of order {j} at 1 diverges")
    if not weighted.error.exact and weighted.error.npow >= -1:
        raise DivergenceError(f"the derivative of order {j} at 1 is not controlled by the expansion")
    work = digits + 10
    with mp.workdps(work):
        head = [to_mpf(values[n]) * _falling(n, j) for n in range(len(values))]
    value, bound = accelerated_sum(head, weighted, 0, work)
    with mp.workdps(digits):
        return +value, +bound


def taylor_at_one(a_coeffs: SeriesProvider, b_coeffs: SeriesProvider, j: int = 0,
                  digits: int = DEFAULT_DIGITS, a_asym: CoeffAsymptotics | None = None,
                  b_asym: CoeffAsymptotics | None = None):
    """(f (.) g)^(j)(1) = sum_n f_n g_n n!/(n-j)!, accelerated by the product asymptotics."""
    a_asym = a_asym or a_coeffs.asymptotics
    b_asym = b_asym or b_coeffs.asymptotics
    if a_asym is None or b_asym is None:
        raise ValueError("coefficient asymptotics are needed for both factors")
    N = min(len(a_coeffs), len(b_coeffs))
    work = digits + 10
    with mp.workdps(work):
        values = [to_mpf(a_coeffs[n]) * to_mpf(b_coeffs[n]) for n in range(N)]
    value, _ = series_sum(values, multiply(a_asym, b_asym), j, digits)
    return value


# --------------------------------------------------------------------------
# zigzag


def _basis_coefficients(H: SingularExpansion, asym: CoeffAsymptotics, basis: str, N: int, digits: int) -> list:
    if basis == "polylog":
        with mp.workdps(digits):
            out = [mpf(0)]
            for n in range(1, N):
                logn = mpmath.log(n)
                out.append(sum(to_mpf(t.coeff) * mpf(n) ** to_mpf(t.npow) * logn**t.logpow for t in asym.terms))
        return out
    return expansion_coefficients(H.with_digits(digits), N)


def zigzag_from_asymptotics(asym: CoeffAsymptotics, coeffs, basis: str = "standard",
                            terms: int = 1000, max_degree: int = 4,
                            digits: int | None = None) -> SingularExpansion:
    """Singular expansion of sum c_n z^n from the asymptotics of c_n and c_0..c_{N-1}.

    H = reconstruct(asym) carries the singular terms; the polynomial part is
    sum_j (-1)^j D_j (1-z)^j / j! with D_j = (sum c_n z^n - H)^(j)(1) for all
    j below the error exponent of H.
    """
    digits = digits or asym.digits
    work = digits + 30
    # polynomial coefficients are kept while the tail bound of their sums
    # stays below 10^-(digits/2) relative
    H = reconstruct(asym, basis)
    if basis == "polylog":
        rem = CoeffAsymptotics((), asym.error, asym.exp_factor, work)
    else:
        deep = transfer(H.with_digits(work), _transfer_depth(asym, H), work)
        rem = (asym - deep).truncate(asym.error)
        if rem.terms:
            rem = CoeffAsymptotics((), asym.error, asym.exp_factor, work)
    N = min(terms, len(coeffs))
    h = _basis_coefficients(H, asym, basis, N, work)
    with mp.workdps(work):
        diff = [to_mpf(coeffs[n]) - to_mpf(h[n]) for n in range(N)]
    if H.error.exact:
        degrees = range(max_degree + 1)
    else:
        degrees = range(max(0, ceil(H.error.aexp)))
    poly = []
    error = H.error
    for j in degrees:
        Dj, bound = series_sum(diff, rem, j, work)
        if bound > mpf(10) ** (-(digits // 2)) * max(1, abs(Dj)):
            # the tail is no longer controlled: stop the polynomial here
            error = ErrorBudget(j) if error.exact or error.key > (Fraction(j), 0) else error
            break
        with mp.workdps(work):
            poly.append(((-1) ** j * Dj / factorial(j), Fraction(j), 0))
    P = SingularExpansion.from_terms(poly, EXACT, H.rho, work)
    return _rounded_expansion(add(H.with_digits(work), P).truncate(error), digits)


def _transfer_depth(asym: CoeffAsymptotics, H: SingularExpansion) -> int:
    if asym.error.exact or not H.terms:
        return 4
    top = max(-t.alpha - 1 for t in H.terms)
    return max(1, int(top - asym.error.npow) + 2)


def zigzag(f_exp: SingularExpansion, g_exp: SingularExpansion,
           f_coeffs: SeriesProvider | None = None, g_coeffs: SeriesProvider | None = None,
           depth: int | None = None, basis: str = "standard", terms: int = 1000,
           f_asym: CoeffAsymptotics | None = None, g_asym: CoeffAsymptotics | None = None,
           max_degree: int = 4) -> SingularExpansion:
    """Singular expansion of f (.) g (both expansions taken at rho = 1).

    Coefficients default to those of the expansions themselves, which is
    right when the expansion is exact (the function *is* its singular part).
    The default asymptotic depth makes the truncation error of the Taylor
    sums at 1 negligible at the working precision.
    """
    digits = max(f_exp.digits, g_exp.digits)
    work = digits + 30
    if depth is None:
        depth = max(6, ceil(digits / mpmath.log10(terms)) + 8)
    f_asym = f_asym or transfer(f_exp.with_digits(work), depth, work)
    g_asym = g_asym or transfer(g_exp.with_digits(work), depth, work)
    prod = multiply(f_asym, g_asym)
    fc = _coefficient_list(f_exp, f_coeffs, terms, work)
    gc = _coefficient_list(g_exp, g_coeffs, terms, work)
    N = min(len(fc), len(gc))
    with mp.workdps(work):
        coeffs = [fc[n] * gc[n] for n in range(N)]
    out = zigzag_from_asymptotics(prod, coeffs, basis, N, max_degree, digits)
    return _rounded_expansion(out, digits)


def _coefficient_list(exp: SingularExpansion, provider: SeriesProvider | None, N: int, work: int) -> list:
    if provider is not None:
        with mp.workdps(work):
            return [to_mpf(v) for v in provider.coefficients(min(N, len(provider)))]
    if not exp.error.exact:
        raise ValueError("an inexact expansion needs an explicit coefficient provider")
    return expansion_coefficients(exp.with_digits(work), N)
