"""Tree-recurrence cost models and two classical applications.

Each model turns the ordinary generating function of a toll sequence into
the generating function of expected costs by a fixed chain of operations:

``bst``        f = (1-z)^-2 int_0^z t'(w) (1-w)^2 dw
``catalan``    f(z) = (tau (.) C)(z) / sqrt(1-4z)
``unionfind``  f = t_1 z T' + (1/2) T/(1-T) int_0^z d/dw(tau (.) T^2) dw / T

Every chain runs on singular expansions, its integration constants come from
accelerated coefficient sums, and the final expansion is transferred to the
asymptotics of f_n after dividing out the model's normalization omega_n.
The Catalan and union-find chains work in the rescaled variables x = 4z and
x = e z so that the singularity sits at 1.
"""

from __future__ import annotations

import warnings
from decimal import Decimal, localcontext
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import mpmath
from mpmath import mp, mpf

from . import oracle
from .expansion import (
    EXACT,
    ErrorBudget,
    Rho,
    SingularExpansion,
    add,
    add_all,
    differentiate,
    integrate,
    multiply as multiply_exp,
    polylog_expansion,
    power,
    reciprocal,
    rescale,
    scale,
    ConstantValue,
    to_dict as expansion_to_dict,
)
from .hadamard import zigzag
from .oracle import SeriesProvider
from .specfun import DEFAULT_DIGITS, to_fraction, to_mpf
from .summation import SeriesRule, accelerated_sum, weight_asym
from .tolls import TollSpec
from .transfer import (
    CoeffAsymptotics,
    CoeffBound,
    binomial_asym,
    multiply,
    reciprocal_series,
    scale_asym,
    singular_coefficients,
    to_dict as asym_to_dict,
    transfer,
)

__all__ = [
    "TollSpec", "ModelKind", "MODELS", "Constant", "CostAnalysis", "CayleyTree",
    "ConstantMismatchError", "DivergentConstantError", "UnsupportedDimensionError",
    "cayley_expand", "bst_analyze", "bst_constants", "catalan_analyze", "catalan_constants",
    "unionfind_analyze", "unionfind_constant", "polya_analyze", "stirling_analyze",
    "moment_pump", "analyze", "snap_toll",
]

SNAP_TOLERANCE = Fraction(1, 10**9)
# constants keep a few digits beyond their nominal precision so that
# fixed-point display to that many decimals rounds correctly
GUARD = 3


class ConstantMismatchError(ArithmeticError):
    """Two independent evaluations of a constant disagree beyond the requested precision."""


class DivergentConstantError(ValueError):
    """The series defining a constant diverges for this toll."""


class UnsupportedDimensionError(ValueError):
    """Only walks in dimensions 1, 2 and 3 are analysed."""


# --------------------------------------------------------------------------
# result types


def fixed_decimal(x, places: int) -> str:
    """x rounded to ``places`` digits after the decimal point, zeros kept."""
    with mp.workdps(places + 2 * GUARD + 10):
        text = mpmath.nstr(to_mpf(x), places + 2 * GUARD + 10, strip_zeros=False)
    with localcontext() as ctx:
        ctx.prec = places + 2 * GUARD + 30
        return format(Decimal(text).quantize(Decimal(1).scaleb(-places)), "f")


@dataclass(frozen=True)
class Constant:
    name: str
    value: object
    digits: int
    provenance: str  # series | mellin | closed-form

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": fixed_decimal(self.value, self.digits),
            "digits": self.digits,
            "provenance": self.provenance,
        }


@dataclass(frozen=True)
class CostAnalysis:
    """Expected-cost analysis of one (model, toll) cell.

    ``f_singular`` is the expansion of the normalized cost generating function
    sum omega_n f_n z^n at its singularity, ``fn_asym`` the asymptotics of f_n.
    """

    model: str
    toll: TollSpec
    f_singular: SingularExpansion
    fn_asym: CoeffAsymptotics
    constants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "toll": self.toll.label(),
            "singular": expansion_to_dict(self.f_singular),
            "asymptotics": asym_to_dict(self.fn_asym),
            "constants": [c.to_dict() for c in sorted(self.constants.values(), key=lambda c: c.name)],
        }


@dataclass(frozen=True)
class ModelKind:
    """Normalization omega_n, split offset a (sizes k and n-a-k) and split law."""

    name: str
    root_size: int

    def normalization(self, n: int) -> Fraction:
        if self.name == "bst":
            return Fraction(1)
        if self.name == "catalan":
            return Fraction(comb(2 * n, n), n + 1)
        return Fraction(0) if n == 0 else Fraction(n ** (n - 1), factorial(n))

    def split_probabilities(self, n: int) -> list:
        """[(k, n-a-k, p_{n,k})] as exact rationals."""
        return oracle.split_probabilities(self.name, n)

    def mean_oracle(self, toll, N: int, mode: str = "auto", digits: int = 2 * DEFAULT_DIGITS) -> SeriesProvider:
        return oracle.MEAN_ORACLES[self.name](toll, N, mode, digits)


MODELS = {
    "bst": ModelKind("bst", 1),
    "catalan": ModelKind("catalan", 1),
    "unionfind": ModelKind("unionfind", 0),
}


def snap_toll(toll: TollSpec, model: str) -> TollSpec:
    """Move an exponent within 1e-9 of an exceptional value onto it, with a warning.

    Exceptional exponents are those where logarithms enter the expansion:
    integers for the BST model, half-integers for the other two.
    """
    if toll.kind != "power":
        return toll
    alpha = toll.alpha
    step = Fraction(1) if model == "bst" else Fraction(1, 2)
    near = round(alpha / step) * step
    if near > 0 and near != alpha and abs(alpha - near) < SNAP_TOLERANCE:
        if model != "bst" and near.denominator == 1:
            return toll
        warnings.warn(f"exponent {alpha} snapped to {near}", stacklevel=3)
        return TollSpec.power(near)
    return toll


# --------------------------------------------------------------------------
# shared pieces


def _u(power_: int = 1, digits: int = DEFAULT_DIGITS) -> SingularExpansion:
    return SingularExpansion.monomial(power_, digits=digits)


def _one_minus_u(digits: int) -> SingularExpansion:
    """x = 1 - (1 - x)."""
    return SingularExpansion.from_terms([(1, 0), (-1, 1)], digits=digits)


def toll_asymptotics(toll: TollSpec, digits: int = DEFAULT_DIGITS) -> CoeffAsymptotics:
    """t_n itself, as an exact coefficient expansion."""
    if toll.kind == "log":
        return CoeffAsymptotics.from_terms([(1, 0, 1)], digits=digits)
    return CoeffAsymptotics.from_terms([(1, toll.alpha, 0)], digits=digits)


def _stirling2(n: int, k: int) -> int:
    return sum((-1) ** (k - j) * comb(k, j) * j**n for j in range(k + 1)) // factorial(k)


def integer_polylog(m: int, digits: int = DEFAULT_DIGITS) -> SingularExpansion:
    """Li_{-m}(z) = sum_k (-1)^(m+1-k) (k-1)! S(m+1, k) (1-z)^-k, exactly."""
    terms = [((-1) ** (m + 1 - k) * factorial(k - 1) * _stirling2(m + 1, k), -k) for k in range(1, m + 2)]
    return SingularExpansion.from_terms(terms, EXACT, digits=digits)


def toll_expansion(toll: TollSpec, aexp, digits: int = DEFAULT_DIGITS) -> SingularExpansion:
    """Singular expansion of sum t_n z^n at z = 1."""
    if toll.kind == "log":
        return polylog_expansion(0, 1, aexp, digits)
    if toll.is_rational:
        return integer_polylog(int(toll.alpha), digits)
    return polylog_expansion(-toll.alpha, 0, aexp, digits)


def _finish(f_x: SingularExpansion, weight: SingularExpansion, rho: Rho, depth: int, digits: int,
            transfer_depth: int) -> tuple:
    """Transfer f(x) and divide by the asymptotics of omega_n rho^n, both tagged with rho."""
    f_rho = rescale(f_x, rho)
    fa = transfer(f_rho, transfer_depth, digits)
    wa = transfer(rescale(weight, rho), transfer_depth, digits)
    fn = multiply(fa, reciprocal_series(wa, transfer_depth + depth))
    return f_rho, fn


def _rounded(a: CoeffAsymptotics, digits: int) -> CoeffAsymptotics:
    with mp.workdps(digits):
        terms = [(+c.coeff if isinstance(c.coeff, mpf) else c.coeff, c.npow, c.logpow) for c in a.terms]
    return CoeffAsymptotics.from_terms(terms, a.error, a.exp_factor, digits)


def _rounded_exp(f: SingularExpansion, digits: int) -> SingularExpansion:
    with mp.workdps(digits):
        terms = [(+t.coeff if isinstance(t.coeff, mpf) else t.coeff, t.alpha, t.logpow) for t in f.terms]
    return SingularExpansion.from_terms(terms, f.error, f.rho, digits)


def _check_depth(depth: int) -> None:
    if depth < 1:
        raise ValueError("depth must be at least 1")


def _check_agreement(name: str, a, b, prec: int) -> None:
    with mp.workdps(prec + 10):
        gap = abs(to_mpf(a) - to_mpf(b))
        if gap > mpf(10) ** (-(prec - 5)) * max(1, abs(to_mpf(a))):
            raise ConstantMismatchError(f"{name}: series and integral disagree by {mpmath.nstr(gap, 5)}")


# --------------------------------------------------------------------------
# Cayley tree function


@dataclass(frozen=True)
class CayleyTree:
    """T(z) = z e^T(z): Taylor coefficients and the expansion in h = (1 - e z)^(1/2)."""

    taylor: SeriesProvider
    singular: SingularExpansion  # in x = e z, rho = 1/e
    d: tuple

    def square_taylor(self, N: int) -> SeriesProvider:
        return SeriesProvider(oracle.cayley_square_coefficients(N), "exact", self.singular.digits, "T^2")


@lru_cache(maxsize=None)
def _cayley_q(order: int) -> tuple:
    """q_m with T = 1 + sum q_m s^m, s = -sqrt(2) h, all rational.

    With T = 1 + S the equation T e^-T = 1 - h^2 reads
    S^2 phi(S) = s^2 where phi(S) = 2 sum_k (-1)^k (k-1)/k! S^(k-2), so
    S sqrt(phi(S)) = s and S is the reversion of S sqrt(phi(S)).
    """
    N = order + 2
    phi = [Fraction(2 * (-1) ** k * (k - 1), factorial(k)) for k in range(2, N + 2)]
    root = oracle.sqrt(SeriesProvider(phi, "exact"), N)
    g = SeriesProvider([Fraction(0)] + list(root.values[: N - 1]), "exact")
    S = oracle.revert(g, N)
    return tuple(S.values[: order + 1])


def cayley_expand(order: int = 8, digits: int = DEFAULT_DIGITS, taylor_terms: int = 200) -> CayleyTree:
    """Cayley tree function with d_0..d_order of T(z) = sum d_m (1 - e z)^(m/2)."""
    if order > 30:
        raise ValueError("order must be at most 30")
    q = _cayley_q(order)
    work = digits + 5
    with mp.workdps(work):
        r2 = -mpmath.sqrt(2)
        d = [mpf(1)] + [to_mpf(q[m]) * r2**m for m in range(1, order + 1)]
        # even orders are rational
        d = [to_fraction(q[m]) * 2 ** (m // 2) * (-1) ** m if m % 2 == 0 and m else c for m, c in enumerate(d)]
        d[0] = Fraction(1)
    terms = [(c, Fraction(m, 2)) for m, c in enumerate(d) if c != 0]
    singular = SingularExpansion.from_terms(terms, ErrorBudget(Fraction(order + 1, 2)), Rho(1, -1), digits)
    taylor = SeriesProvider(oracle.cayley_coefficients(taylor_terms), "exact", digits, "T")
    return CayleyTree(taylor, _rounded_exp(singular, digits), tuple(d))


# --------------------------------------------------------------------------
# binary search trees


def _bst_tail(toll: TollSpec, depth: int, digits: int):
    """(t_-, asymptotics of 2(t_n - [z^n]t_-)/((n+1)(n+2))) for the BST constant."""
    if toll.kind == "log":
        minus = []
    else:
        tau = polylog_expansion(-toll.alpha, 0, -1, digits)
        minus = [t for t in tau.terms if t.alpha <= -2]
    excess = toll_asymptotics(toll, digits)
    if minus:
        fm = SingularExpansion.from_terms(minus, EXACT, digits=digits)
        excess = excess - transfer(fm, depth, digits)
    return minus, scale_asym(multiply(excess, weight_asym([1, 2], depth, digits)), 2)


def _bst_series(toll: TollSpec, digits: int, N: int = 1000) -> mpf:
    """2 sum_{n>=1} (t_n - t_-,n)/((n+1)(n+2)), head summed directly, tail by Hurwitz zeta."""
    work = digits + 15
    depth = max(8, int((work + 5) / 3) + 4)
    minus, asym = _bst_tail(toll, depth, work)
    with mp.workdps(work):
        t = toll.values(N, "mp", work)
        sub = [mpf(0)] * N
        for term in minus:
            cs = singular_coefficients(term.alpha, term.logpow, N, work)
            sub = [s + to_mpf(term.coeff) * to_mpf(c) for s, c in zip(sub, cs)]
        head = [2 * (t[n] - sub[n]) / ((n + 1) * (n + 2)) for n in range(1, N)]
    value, _ = accelerated_sum(head, asym, 1, work)
    with mp.workdps(digits):
        return +value


def _bst_kernel(t):
    """sum_n n t^(n-1)/((n+1)(n+2)) = ((2-t) L(t) - 2t)/t^3."""
    if t <= 0.5:
        total, term, n = mpf(0), mpf(1), 1
        eps = mpf(10) ** (-mp.dps - 5)
        while True:
            piece = n * term / ((n + 1) * (n + 2))
            total += piece
            if abs(piece) < eps * abs(total):
                return total
            term *= t
            n += 1
    L = -mpmath.log1p(-t)
    return ((2 - t) * L - 2 * t) / t**3


def _catalan_kernel(t, v=None):
    """sum_n n C_n 4^-n t^(n-1) = 1/(sqrt(1-t)(1+sqrt(1-t))^2); v = sqrt(1-t) if known."""
    v = mpmath.sqrt(1 - t) if v is None else v
    return 1 / (v * (1 + v) ** 2)


def _mellin_weight(toll: TollSpec, ell):
    """d-th derivative in alpha of ell^-alpha / Gamma(1-alpha), as needed by the toll."""
    if toll.kind == "log":
        return -(mpmath.euler + mpmath.log(ell))
    a = to_mpf(toll.alpha)
    return ell ** (-a) * mpmath.rgamma(1 - a)


def _upper_power(toll: TollSpec) -> int:
    """p such that u = v^p removes the endpoint singularity of ell^-alpha at u = 0."""
    if toll.kind == "log":
        return 2
    return max(2, int(mpmath.ceil(1 / (1 - to_mpf(toll.alpha)))))


def _bst_mellin(toll: TollSpec, digits: int) -> mpf:
    """2 int_0^1 kernel(t) w(log 1/t) dt, split at 1/2 with t = 1 - v^p on the upper half."""
    p = _upper_power(toll)
    with mp.workdps(digits + 15):
        def lower(t):
            return _bst_kernel(t) * _mellin_weight(toll, -mpmath.log(t))

        def upper(v):
            u = v**p
            t = 1 - u
            k = ((2 - t) * (-p * mpmath.log(v)) - 2 * t) / t**3
            return p * v ** (p - 1) * k * _mellin_weight(toll, -mpmath.log1p(-u))

        half = mpf(1) / 2
        value = 2 * (mpmath.quad(lower, [0, half]) + mpmath.quad(upper, [0, half ** (mpf(1) / p)]))
    with mp.workdps(digits):
        return +value


@lru_cache(maxsize=64)
def _bst_constant(toll: TollSpec, prec: int) -> Constant:
    name = "K'_0" if toll.kind == "log" else f"K_{toll.alpha}"
    series = _bst_series(toll, prec + 5)
    if toll.kind == "log" or toll.alpha < 1:
        mellin = _bst_mellin(toll, prec + 5)
        _check_agreement(name, series, mellin, prec)
        return Constant(name, _round(mellin, prec + GUARD), prec, "mellin")
    return Constant(name, _round(series, prec + GUARD), prec, "series")


def _round(x, digits):
    with mp.workdps(digits):
        return +to_mpf(x)


def bst_constants(toll: TollSpec, prec: int = DEFAULT_DIGITS) -> Constant:
    """Integration constant K[t] = 2 sum (t_n - t_-,n)/((n+1)(n+2)) of the BST chain.

    t_- collects the singular terms of sum t_n z^n of exponent <= -2 (none
    when t_n grows slower than n).  For the log toll and for n^alpha with
    alpha < 1 the value is confirmed by an independent Mellin integral and the
    integral value is returned; otherwise the accelerated series value.
    """
    if toll.kind == "power" and toll.alpha.denominator == 1:
        raise ValueError(f"no constant for integer exponent {toll.alpha}: the integral is elementary")
    return _bst_constant(toll, prec)


def bst_analyze(toll: TollSpec, depth: int = 4, digits: int = DEFAULT_DIGITS) -> CostAnalysis:
    """Expected cost of a random binary search tree under toll t."""
    _check_depth(depth)
    toll = snap_toll(toll, "bst")
    work = digits + 10
    aexp = depth + 1
    tau = toll_expansion(toll, aexp, work)
    g = multiply_exp(differentiate(tau), _u(2, work))
    constants = {}
    source = None
    if not tau.is_exact:
        K = bst_constants(toll, work)
        constants[K.name] = Constant(K.name, _round(K.value, digits + GUARD), digits, K.provenance)
        source = ConstantValue(K.value)
    f = multiply_exp(integrate(g, source), _u(-2, work))
    fn = transfer(f, depth + 2, work)
    return CostAnalysis("bst", toll, _rounded_exp(f, digits), _rounded(fn, digits), constants)


# --------------------------------------------------------------------------
# uniform binary (Catalan) trees, in x = 4z


def catalan_weight_asym(depth: int, digits: int = DEFAULT_DIGITS) -> CoeffAsymptotics:
    """C_n 4^-n = [x^n](1-x)^(-1/2) / (n+1)."""
    central = transfer(SingularExpansion.monomial(Fraction(-1, 2), digits=digits), depth, digits)
    return multiply(central, weight_asym([1], depth, digits))


def catalan_scaled(order: int, digits: int = DEFAULT_DIGITS) -> SingularExpansion:
    """C(x/4) = 2/(1 + sqrt(1-x)) = 2 sum_k (-1)^k (1-x)^(k/2), through (1-x)^((order-1)/2)."""
    terms = [(2 * (-1) ** k, Fraction(k, 2)) for k in range(order)]
    return SingularExpansion.from_terms(terms, ErrorBudget(Fraction(order, 2)), digits=digits)


def _catalan_provider(N: int, digits: int) -> SeriesProvider:
    C = oracle.catalan_numbers(N)
    values = [Fraction(C[n], 4**n) for n in range(N)]
    return SeriesProvider(values, "exact", digits, "C_n/4^n", catalan_weight_asym(12, digits))


def _catalan_series(toll: TollSpec, digits: int, N: int = 1000) -> mpf:
    """sum_{n>=1} t_n C_n 4^-n with a Hurwitz-zeta tail."""
    work = digits + 15
    depth = max(8, int((work + 5) / 3) + 4)
    asym = multiply(toll_asymptotics(toll, work), catalan_weight_asym(depth, work))
    C = oracle.catalan_numbers(N)
    with mp.workdps(work):
        t = toll.values(N, "mp", work)
        head = [t[n] * C[n] / mpf(4) ** n for n in range(1, N)]
    value, _ = accelerated_sum(head, asym, 1, work)
    with mp.workdps(digits):
        return +value


def _catalan_mellin(toll: TollSpec, digits: int) -> mpf:
    """int_0^1 w(log 1/t) / (sqrt(1-t)(1+sqrt(1-t))^2) dt, with t = 1 - s^q on [1/2, 1]."""
    if toll.kind == "log":
        q = 2
    else:
        q = max(2, int(mpmath.ceil(1 / (mpf(1) / 2 - to_mpf(toll.alpha)))))
    with mp.workdps(digits + 15):
        def lower(t):
            return _catalan_kernel(t) * _mellin_weight(toll, -mpmath.log(t))

        def upper(s):
            h = s ** (mpf(q) / 2)
            return q * s ** (mpf(q) / 2 - 1) / (1 + h) ** 2 * _mellin_weight(toll, -mpmath.log1p(-(s**q)))

        half = mpf(1) / 2
        value = mpmath.quad(lower, [0, half]) + mpmath.quad(upper, [0, half ** (mpf(1) / q)])
    with mp.workdps(digits):
        return +value


@lru_cache(maxsize=64)
def _catalan_constant(toll: TollSpec, prec: int) -> Constant:
    name = "Kbar'_0" if toll.kind == "log" else f"Kbar_{toll.alpha}"
    series = _catalan_series(toll, prec + 5)
    mellin = _catalan_mellin(toll, prec + 5)
    _check_agreement(name, series, mellin, prec)
    return Constant(name, _round(mellin, prec + GUARD), prec, "mellin")


def catalan_constants(toll: TollSpec, prec: int = DEFAULT_DIGITS) -> Constant:
    """Kbar[t] = sum_n t_n C_n 4^-n, for n^alpha with alpha < 1/2 or log n.

    Returned from a Mellin integral after agreement with the accelerated series.
    """
    if toll.kind == "power" and toll.alpha >= Fraction(1, 2):
        raise DivergentConstantError("sum n^alpha C_n 4^-n diverges for alpha >= 1/2")
    return _catalan_constant(toll, prec)


def _hadamard_with_toll(toll: TollSpec, g_exp: SingularExpansion, g_coeffs: SeriesProvider,
                        g_asym: CoeffAsymptotics, terms: int, digits: int, power_: int = 1) -> SingularExpansion:
    """tau^(.power_) (.) g by the zigzag route, with the exact asymptotics of t_n^power_."""
    tau = SingularExpansion.zero(digits=digits)
    work = digits + 30
    with mp.workdps(work):
        t = [v**power_ for v in toll.values(terms, "mp", work)]
    t_asym = toll_asymptotics(toll, work)
    for _ in range(power_ - 1):
        t_asym = multiply(t_asym, toll_asymptotics(toll, work))
    return zigzag(tau, g_exp, SeriesProvider(t, "mp", work, str(toll)), g_coeffs, terms=terms,
                  f_asym=t_asym, g_asym=g_asym)


def _zigzag_depth(toll: TollSpec, depth: int, digits: int, terms: int) -> int:
    """Asymptotic depth at which the tails of the Taylor sums at 1 fall below 10^-(digits/2)."""
    lead = toll.alpha if toll.kind == "power" else Fraction(0)
    need = (digits / 2 + 2) / mpmath.log10(terms)
    return max(depth, int(need + lead) + 4)


def _catalan_depth(toll: TollSpec, depth: int) -> int:
    lead = toll.alpha if toll.kind == "power" else Fraction(0)
    return depth + 2 + int(lead)


def catalan_analyze(toll: TollSpec, depth: int = 4, digits: int = DEFAULT_DIGITS,
                    terms: int = 1000) -> CostAnalysis:
    """Expected cost of a uniform random binary tree under toll t."""
    _check_depth(depth)
    toll = snap_toll(toll, "catalan")
    work = digits + 10
    D = _catalan_depth(toll, depth)
    Dz = _zigzag_depth(toll, D, work, terms)
    C = catalan_scaled(2 * Dz + 2, work)
    Cc = _catalan_provider(terms, work + 30)
    H = _hadamard_with_toll(toll, C, Cc, catalan_weight_asym(Dz, work + 30), terms, work)
    f_x = multiply_exp(H, _u(Fraction(-1, 2), work))
    weight = SingularExpansion.monomial(Fraction(-1, 2), digits=work)
    # [x^n] of the weight is binom(2n,n)/4^n; the extra 1/(n+1) is divided out below
    f_rho, fn = _finish(f_x, weight, Rho(Fraction(1, 4)), depth, work, D)
    fn = multiply(fn, _shift_poly(1, work))
    constants = {}
    if toll.kind == "log" or toll.alpha < Fraction(1, 2):
        K = catalan_constants(toll, digits)
        constants[K.name] = K
    return CostAnalysis("catalan", toll, _rounded_exp(f_rho, digits), _rounded(fn, digits), constants)


def _shift_poly(s: int, digits: int) -> CoeffAsymptotics:
    """n + s, exactly."""
    return CoeffAsymptotics.from_terms([(1, 1), (s, 0)], digits=digits)


# --------------------------------------------------------------------------
# union-find trees, in x = e z


def stirling_ratio_asym(depth: int, digits: int = DEFAULT_DIGITS) -> CoeffAsymptotics:
    """n^n e^-n / n! = (2 pi n)^(-1/2) exp(-sum_k B_2k / (2k(2k-1) n^(2k-1)))."""
    from .transfer import bernoulli_numbers
    from .expansion import _exp_series

    B = bernoulli_numbers(2 * depth + 2)
    inner = [Fraction(0)] * (depth + 1)
    for k in range(1, depth // 2 + 2):
        if 2 * k - 1 <= depth:
            inner[2 * k - 1] = -B[2 * k] / (2 * k * (2 * k - 1))
    series = _exp_series(inner, depth + 1)
    with mp.workdps(digits + 5):
        lead = 1 / mpmath.sqrt(2 * mpmath.pi)
        terms = [(lead * to_mpf(c), Fraction(-1, 2) - m, 0) for m, c in enumerate(series[:depth]) if c]
    return CoeffAsymptotics.from_terms(terms, CoeffBound(Fraction(-1, 2) - depth), digits=digits)


def cayley_weight_asym(depth: int, digits: int = DEFAULT_DIGITS) -> CoeffAsymptotics:
    """T_n e^-n = n^(n-1) e^-n / n!."""
    return multiply(stirling_ratio_asym(depth, digits), CoeffAsymptotics.from_terms([(1, -1)], digits=digits))


def cayley_square_weight_asym(depth: int, digits: int = DEFAULT_DIGITS) -> CoeffAsymptotics:
    """[x^n] T(x/e)^2 = 2 (n-1) n^(n-2) e^-n / n!."""
    poly = CoeffAsymptotics.from_terms([(2, -1), (-2, -2)], digits=digits)
    return multiply(stirling_ratio_asym(depth, digits), poly)


def _scaled_provider(values: list, digits: int, name: str, asym=None) -> SeriesProvider:
    with mp.workdps(digits):
        einv = mpmath.exp(-1)
        out = [to_mpf(v) * einv**n for n, v in enumerate(values)]
    return SeriesProvider(out, "mp", digits, name, asym)


@dataclass(frozen=True)
class _UnionFindChain:
    toll: TollSpec
    T: SingularExpansion
    h: SingularExpansion  # G'(x)/T(x/e) with G = tau (.) T^2(x/e)
    h_rule: SeriesRule
    digits: int


def _unionfind_chain(toll: TollSpec, depth: int, digits: int, terms: int) -> _UnionFindChain:
    D = _catalan_depth(toll, depth)
    Dz = _zigzag_depth(toll, D, digits, terms)
    order = min(30, 2 * Dz + 2)
    T = cayley_expand(order, digits).singular
    T = SingularExpansion(T.terms, T.error, digits=digits)
    T2 = power(T, 2)
    N = terms + 2
    T2c = _scaled_provider(oracle.cayley_square_coefficients(N), digits + 30, "T^2",
                           cayley_square_weight_asym(Dz, digits + 30))
    G = _hadamard_with_toll(toll, T2, T2c, T2c.asymptotics, terms, digits)
    h = multiply_exp(differentiate(G), reciprocal(T, order + 2))
    # Taylor coefficients of h: (G'/x) / (T/x)
    t = toll.values(N + 1, "mp", digits + 10)
    with mp.workdps(digits + 10):
        Gc = [t[n] * to_mpf(T2c[n]) for n in range(N)]
        Gdx = [(n + 2) * Gc[n + 2] for n in range(N - 2)]
        Tc = _scaled_provider(oracle.cayley_coefficients(N), digits + 10, "T")
        Tdx = list(Tc.values[1:N - 1])
    hc = oracle.div(SeriesProvider(Gdx, "mp", digits + 10), SeriesProvider(Tdx, "mp", digits + 10))
    rule = SeriesRule(lambda count: list(hc.values[:count]), terms=min(terms, len(hc)), depth=Dz)
    return _UnionFindChain(toll, T, h, rule, digits)


@lru_cache(maxsize=64)
def _unionfind_constant(toll: TollSpec, prec: int, terms: int) -> Constant:
    name = "Khat'_0" if toll.kind == "log" else f"Khat_{toll.alpha}"
    chain = _unionfind_chain(toll, 3, prec + 10, terms)
    value = chain.h_rule.regular_integral(chain.h, [], prec + 10)
    return Constant(name, _round(value, prec + GUARD), prec, "series")


def unionfind_constant(toll: TollSpec, prec: int = 30, terms: int = 600) -> Constant:
    """Khat[t] = int_0^(1/e) d/dw(tau (.) T^2)(w) dw / T(w), for alpha < 1/2 or log n.

    Computed as sum_n h_n/(n+1) over the Taylor coefficients of the integrand
    in x = e w, with the tail summed from the integrand's singular expansion.
    """
    if toll.kind == "power" and toll.alpha >= Fraction(1, 2):
        raise DivergentConstantError("the integral diverges for alpha >= 1/2")
    return _unionfind_constant(toll, prec, terms)


def unionfind_analyze(toll: TollSpec, depth: int = 4, digits: int = DEFAULT_DIGITS,
                      terms: int = 600) -> CostAnalysis:
    """Expected cost of a union-find tree under toll t."""
    _check_depth(depth)
    toll = snap_toll(toll, "unionfind")
    work = digits + 10
    chain = _unionfind_chain(toll, depth, work, terms)
    T = chain.T
    I = integrate(chain.h, chain.h_rule)
    ratio = multiply_exp(T, reciprocal(add(_u(0, work), scale(T, -1)), len(T.terms) + 2))
    f_x = scale(multiply_exp(ratio, I), Fraction(1, 2))
    if toll.t1:
        xTp = multiply_exp(_one_minus_u(work), differentiate(T))
        f_x = add(f_x, scale(xTp, toll.t1))
    rho = Rho(1, -1)
    f_rho = rescale(f_x, rho)
    D = _catalan_depth(toll, depth)
    fa = transfer(f_rho, D, work)
    wa = cayley_weight_asym(D + depth + 2, work)
    wa = CoeffAsymptotics(wa.terms, wa.error, rho.inverse(), work)
    fn = multiply(fa, reciprocal_series(wa, D + depth))
    constants = {}
    if toll.kind == "log" or toll.alpha < Fraction(1, 2):
        K = unionfind_constant(toll, min(digits, 30), terms)
        constants[K.name] = K
    return CostAnalysis("unionfind", toll, _rounded_exp(f_rho, digits), _rounded(fn, digits), constants)


# --------------------------------------------------------------------------
# Polya walks


@dataclass(frozen=True)
class PolyaAnalysis:
    """First return to the origin of the simple walk on Z^d, at time 2n."""

    dimension: int
    p_singular: SingularExpansion  # P(z) = sum p_n z^n
    return_singular: SingularExpansion  # Q(z) = sum q_n z^n
    pn_asym: CoeffAsymptotics
    constants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": "polya",
            "dimension": self.dimension,
            "singular": expansion_to_dict(self.p_singular),
            "asymptotics": asym_to_dict(self.pn_asym),
            "constants": [c.to_dict() for c in sorted(self.constants.values(), key=lambda c: c.name)],
        }


def _return_probabilities(N: int, digits: int) -> list:
    """4^-n binom(2n, n) for n < N."""
    with mp.workdps(digits):
        q = [mpf(1)]
        for n in range(1, N):
            q.append(q[-1] * (2 * n - 1) / (2 * n))
    return q


def polya_analyze(d: int, depth: int = 3, digits: int = DEFAULT_DIGITS, terms: int = 1000) -> PolyaAnalysis:
    """P(z) = 1 - 1/Q(z) with Q = lambda (.) ... (.) lambda (d factors), lambda = (1-z)^-1/2.

    For d = 2 the expansion of Q starts with L/pi + K, and P is a descending
    series in 1/L; for d = 3, Q(1) is finite and p_n decays like n^-3/2.
    """
    if d not in (1, 2, 3):
        raise UnsupportedDimensionError(f"dimension {d} is not supported (1, 2 or 3)")
    _check_depth(depth)
    work = digits + 10
    lam = SingularExpansion.monomial(Fraction(-1, 2), digits=work)
    constants = {}
    if d == 1:
        Q = lam
    else:
        zig_depth = max(depth, int(work / mpmath.log10(terms)) + 8)
        lam_asym = binomial_asym(Fraction(-1, 2), zig_depth, work + 30)
        q = _return_probabilities(terms, work + 30)
        lam_coeffs = SeriesProvider(q, "mp", work + 30, "lambda")
        Q, Qc, Qa = lam, q, lam_asym
        for _ in range(d - 1):
            Q = zigzag(lam, Q, lam_coeffs, SeriesProvider(Qc, "mp", work + 30), terms=terms,
                       f_asym=lam_asym, g_asym=Qa)
            with mp.workdps(work + 30):
                Qc = [a * b for a, b in zip(Qc, q)]
            Qa = multiply(Qa, lam_asym)
        if d == 2:
            constants["K"] = Constant("K", _round(Q.coefficient(0, 0), digits + GUARD), digits, "series")
        else:
            constants["Q(1)"] = Constant("Q(1)", _round(Q.coefficient(0, 0), digits + GUARD), digits, "series")
    P = add(_u(0, work), scale(reciprocal(Q, depth + 1), -1))
    if d == 2:
        # only the 1/L^k scales survive transfer; keep depth of them
        P = P.truncate(ErrorBudget(0, -(depth + 1)))
    pn = transfer(P, depth, work)
    return PolyaAnalysis(d, _rounded_exp(P, digits), _rounded_exp(Q, digits), _rounded(pn, digits), constants)


# --------------------------------------------------------------------------
# Stirling-type formulas


@dataclass(frozen=True)
class StirlingAnalysis:
    """log n! or log S(n) = sum_k k log k, with the additive constant named."""

    kind: str
    f_singular: SingularExpansion
    asym: CoeffAsymptotics
    constants: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": "stirling",
            "kind": self.kind,
            "singular": expansion_to_dict(self.f_singular),
            "asymptotics": asym_to_dict(self.asym),
            "constants": [c.to_dict() for c in sorted(self.constants.values(), key=lambda c: c.name)],
        }


STIRLING_KINDS = {"factorial": 0, "superfactorial": -1}


def stirling_analyze(kind: str = "factorial", depth: int = 4, digits: int = DEFAULT_DIGITS) -> StirlingAnalysis:
    """Partial sums of log k (factorial) or k log k (superfactorial) as [z^n] Li_{s,1}(z)/(1-z).

    The constant term of the result is log sqrt(2 pi) for the factorial and
    log A, A the Glaisher-Kinkelin constant, for the superfactorial.
    """
    if kind not in STIRLING_KINDS:
        raise ValueError(f"kind must be one of {sorted(STIRLING_KINDS)}")
    _check_depth(depth)
    s = STIRLING_KINDS[kind]
    work = digits + 10
    f = multiply_exp(polylog_expansion(s, 1, depth + 1, work), _u(-1, work))
    a = transfer(f, depth + 2, work)
    name = "log sqrt(2 pi)" if kind == "factorial" else "log A"
    value = a.coefficient(0, 0)
    constants = {name: Constant(name, _round(value, digits + GUARD), digits, "closed-form")}
    if kind == "superfactorial":
        with mp.workdps(work):
            A = mpmath.exp(value)
        constants["A"] = Constant("A", _round(A, digits + GUARD), digits, "closed-form")
    return StirlingAnalysis(kind, _rounded_exp(f, digits), _rounded(a, digits), constants)


# --------------------------------------------------------------------------
# second moments


def _leading(a: CoeffAsymptotics, count: int) -> CoeffAsymptotics:
    """The first ``count`` terms, with the next one as the error scale."""
    if len(a.terms) <= count:
        return a
    nxt = a.terms[count]
    return CoeffAsymptotics(a.terms[:count], CoeffBound(nxt.npow, nxt.logpow), a.exp_factor, a.digits)


def _unit_asym(a: CoeffAsymptotics) -> CoeffAsymptotics:
    return CoeffAsymptotics(a.terms, a.error, Rho(1), a.digits)


def _sequence_rule(values: list, terms: int, depth: int) -> SeriesRule:
    return SeriesRule(lambda count: list(values[:count]), terms=min(terms, len(values)), depth=depth)


def _convolve(a: list, b: list, N: int) -> list:
    return [sum(a[k] * b[n - k] for k in range(n + 1)) for n in range(N)]


def _pump_bst(toll: TollSpec, depth: int, digits: int, terms: int) -> tuple:
    work = digits + 10
    mean = bst_analyze(toll, depth + 3, work)
    mu1 = mean.f_singular
    N = terms + 2
    t = toll.values(N, "mp", work + 30)
    m = oracle.exact_bst(toll, N, "mp", work + 30).values
    D = _zigzag_depth(toll, depth + 3, work, terms)
    mean_deep = bst_analyze(toll, D, work).fn_asym
    with mp.workdps(work + 30):
        tm = [t[n] * m[n] for n in range(N)]
        sq = _convolve(m, m, N)
        # r_n = 2 t_n mu_n - t_n^2 + (2/n) sum_k mu_k mu_{n-1-k}
        r = [mpf(0)] + [2 * tm[n] - t[n] ** 2 + 2 * sq[n - 1] / n for n in range(1, N)]
        g = [(n + 1) * r[n + 1] - 2 * n * r[n] + (n - 1 if n else 0) * r[n - 1] for n in range(N - 1)]
    A = zigzag(SingularExpansion.zero(digits=work), mu1, SeriesProvider(t, "mp", work + 30),
               SeriesProvider(m, "mp", work + 30), terms=terms,
               f_asym=toll_asymptotics(toll, work + 30), g_asym=mean_deep)
    if toll.kind == "log":
        B = polylog_expansion(0, 2, depth + 2, work)
    else:
        B = toll_expansion(TollSpec.power(2 * toll.alpha), depth + 2, work)
    Q = integrate(multiply_exp(mu1, mu1), _sequence_rule(sq, terms, D))
    rhat = add_all([scale(A, 2), scale(B, -1), scale(Q, 2)])
    gexp = multiply_exp(differentiate(rhat), _u(2, work))
    f = multiply_exp(integrate(gexp, _sequence_rule(g, terms, D)), _u(-2, work))
    return f, transfer(f, depth + 2, work)


def _pump_catalan(toll: TollSpec, depth: int, digits: int, terms: int) -> tuple:
    work = digits + 10
    D = _zigzag_depth(toll, _catalan_depth(toll, depth + 2), work, terms)
    mean = catalan_analyze(toll, D, work)
    mu1 = rescale(mean.f_singular, Rho(1))  # in x = 4z
    N = terms
    w = catalan_weight_asym(D, work + 30)
    m = oracle.exact_catalan(toll, N, "mp", work + 30).values
    Cc = _catalan_provider(N, work + 30)
    with mp.workdps(work + 30):
        mc = [to_mpf(m[n]) * to_mpf(Cc[n]) for n in range(N)]
    m_asym = multiply(_unit_asym(mean.fn_asym), w)
    A = _hadamard_with_toll(toll, mu1, SeriesProvider(mc, "mp", work + 30), m_asym, terms, work)
    C = catalan_scaled(2 * D + 2, work)
    B = _hadamard_with_toll(toll, C, Cc, w, terms, work, power_=2)
    Q = scale(multiply_exp(_one_minus_u(work), multiply_exp(mu1, mu1)), Fraction(1, 4))
    rhat = add_all([scale(A, 2), scale(B, -1), scale(Q, 2)])
    f_x = multiply_exp(rhat, _u(Fraction(-1, 2), work))
    weight = SingularExpansion.monomial(Fraction(-1, 2), digits=work)
    Dt = _catalan_depth(toll, depth + 2)
    f_rho, fn = _finish(f_x, weight, Rho(Fraction(1, 4)), depth, work, Dt)
    return f_rho, multiply(fn, _shift_poly(1, work))


def moment_pump(model: str, toll: TollSpec, s: int = 2, depth: int = 2, digits: int = 30,
                terms: int = 600) -> CoeffAsymptotics:
    """Leading ``depth`` terms of E[X_n^2] for the bst or catalan model.

    The second moment solves the mean's linear transform with the toll
    r_n = 2 t_n mu_n - t_n^2 + sum_k p_{n,k} 2 mu_k mu_{n-1-k}, whose generating
    function is assembled from the mean's singular expansion.
    """
    if s != 2:
        raise ValueError("only second moments are supported")
    if model not in ("bst", "catalan"):
        raise ValueError("moment pumping is available for the bst and catalan models")
    _check_depth(depth)
    toll = snap_toll(toll, model)
    pump = _pump_bst if model == "bst" else _pump_catalan
    _, fn = pump(toll, depth, digits, terms)
    return _rounded(_leading(fn, depth), digits)


# --------------------------------------------------------------------------
# dispatch

ANALYZERS = {"bst": bst_analyze, "catalan": catalan_analyze, "unionfind": unionfind_analyze}


def analyze(model: str, toll: TollSpec, depth: int = 4, digits: int = DEFAULT_DIGITS) -> CostAnalysis:
    """Run the cost analysis of ``model`` (bst, catalan or unionfind) under ``toll``."""
    try:
        run = ANALYZERS[model]
    except KeyError:
        raise ValueError(f"unknown model {model!r}; expected one of {sorted(ANALYZERS)}") from None
    return run(toll, depth, digits)
