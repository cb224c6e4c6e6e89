"""Singular expansions at z = 1 and their calculus.

A singular expansion is a finite sum of terms ``c (1-z)^alpha L(z)^k`` with
``L(z) = log(1/(1-z))``, an explicit error budget ``O((1-z)^A L(z)^B)`` and a
scale tag ``rho`` recording where the singularity of the original function
sits (the terms always refer to the rescaled variable, singular at 1).

Exponents are exact rationals.  Coefficients are exact rationals where the
arithmetic allows it and mpmath reals otherwise; every expansion records the
decimal precision ``digits`` its numeric coefficients were computed at.

Ordering follows asymptotic dominance as z -> 1: ascending alpha, and for
equal alpha descending powers of L.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Iterable, Sequence

import mpmath
from mpmath import mp, mpf

from .specfun import DEFAULT_DIGITS, central_difference, to_fraction, to_mpf

INF = float("inf")


class MismatchedSingularityError(ValueError):
    """Raised when combining expansions tagged with different singularities."""


class NoDominantTermError(ValueError):
    """Raised when an operation needs a leading term and the expansion is zero."""


class MissingConstSourceError(ValueError):
    """Raised when an integration constant is needed but no way to compute it was given."""


# --------------------------------------------------------------------------
# numbers


def recip(c, digits: int):
    if isinstance(c, (int, Fraction)):
        return Fraction(1) / Fraction(c)
    with mp.workdps(digits):
        return 1 / c


def as_number(c):
    """Normalize ints to Fraction; leave Fractions and mpf untouched."""
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, (Fraction, mpf)):
        return c
    if isinstance(c, float):
        return mpf(c)
    if isinstance(c, str):
        return mpf(c)
    return c


# --------------------------------------------------------------------------
# scale of the singularity


@dataclass(frozen=True)
class Rho:
    """Singularity location ``rational * e**epow`` (exact, so 1/4 and 1/e are both representable)."""

    rational: Fraction = Fraction(1)
    epow: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rational", to_fraction(self.rational))
        if self.rational <= 0:
            raise ValueError("rho must be positive")

    def __mul__(self, other: "Rho") -> "Rho":
        return Rho(self.rational * other.rational, self.epow + other.epow)

    def inverse(self) -> "Rho":
        return Rho(1 / self.rational, -self.epow)

    def value(self, digits: int = DEFAULT_DIGITS):
        with mp.workdps(digits):
            return to_mpf(self.rational) * mpmath.e**self.epow

    def __str__(self) -> str:
        if self.epow == 0:
            return str(self.rational)
        e_part = "e" if abs(self.epow) == 1 else f"e^{abs(self.epow)}"
        num, den = self.rational.numerator, self.rational.denominator
        if self.epow > 0:
            head = e_part if num == 1 else f"{num}*{e_part}"
            return head if den == 1 else f"{head}/{den}"
        den_part = e_part if den == 1 else f"{den}*{e_part}"
        return f"{num}/{den_part}"

    @classmethod
    def parse(cls, text: str) -> "Rho":
        text = text.strip().replace(" ", "")
        if "e" not in text:
            return cls(Fraction(text))
        num, _, den = text.partition("/")

        def split(part):
            coef, epow = Fraction(1), 0
            for factor in part.split("*"):
                if factor.startswith("e"):
                    epow += int(factor[2:]) if factor.startswith("e^") else 1
                elif factor:
                    coef *= Fraction(factor)
            return coef, epow

        nc, ne = split(num)
        dc, de = split(den) if den else (Fraction(1), 0)
        return cls(nc / dc, ne - de)


UNIT = Rho()


# --------------------------------------------------------------------------
# terms and error budgets


@dataclass(frozen=True)
class SingularTerm:
    coeff: object
    alpha: Fraction
    logpow: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alpha", to_fraction(self.alpha))
        object.__setattr__(self, "coeff", as_number(self.coeff))
        if self.logpow < 0 and self.alpha != 0:
            raise ValueError("negative powers of L are only allowed at alpha = 0")

    @property
    def key(self):
        return (self.alpha, -self.logpow)


@dataclass(frozen=True)
class ErrorBudget:
    """``O((1-z)^aexp L^logpow)``; ``aexp = None`` encodes an exact expansion."""

    aexp: Fraction | None
    logpow: int = 0

    def __post_init__(self):
        if self.aexp is not None:
            object.__setattr__(self, "aexp", to_fraction(self.aexp))
            if self.logpow < 0 and self.aexp != 0:
                object.__setattr__(self, "logpow", 0)

    @property
    def exact(self) -> bool:
        return self.aexp is None

    @property
    def key(self):
        return (INF, 0) if self.aexp is None else (self.aexp, -self.logpow)

    def shift(self, da, dk: int = 0) -> "ErrorBudget":
        if self.exact:
            return self
        return ErrorBudget(self.aexp + to_fraction(da), self.logpow + dk)

    def __str__(self) -> str:
        if self.exact:
            return "exact"
        return f"O((1-z)^{self.aexp} L^{self.logpow})"


EXACT = ErrorBudget(None)


def coarsest(*errors: ErrorBudget) -> ErrorBudget:
    """The error budget that dominates all the given ones."""
    return min(errors, key=lambda e: e.key)


# --------------------------------------------------------------------------
# the expansion type


@dataclass(frozen=True)
class SingularExpansion:
    terms: tuple = ()
    error: ErrorBudget = EXACT
    rho: Rho = UNIT
    digits: int = DEFAULT_DIGITS

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def from_terms(cls, items: Iterable, error: ErrorBudget = EXACT, rho: Rho = UNIT,
                   digits: int = DEFAULT_DIGITS) -> "SingularExpansion":
        """Build from ``(coeff, alpha[, logpow])`` tuples or SingularTerm objects, normalized."""
        terms = [t if isinstance(t, SingularTerm) else SingularTerm(*t) for t in items]
        return normalize(cls(tuple(terms), error, rho, digits))

    @classmethod
    def monomial(cls, alpha, logpow: int = 0, coeff=1, **kw) -> "SingularExpansion":
        return cls.from_terms([(coeff, alpha, logpow)], **kw)

    @classmethod
    def zero(cls, error: ErrorBudget = EXACT, **kw) -> "SingularExpansion":
        return cls((), error, **kw)

    @property
    def is_exact(self) -> bool:
        return self.error.exact

    def leading(self) -> SingularTerm:
        if not self.terms:
            raise NoDominantTermError("the expansion has no terms")
        return self.terms[0]

    def coefficient(self, alpha, logpow: int = 0):
        alpha = to_fraction(alpha)
        for t in self.terms:
            if t.alpha == alpha and t.logpow == logpow:
                return t.coeff
        return Fraction(0)

    def truncate(self, error: ErrorBudget) -> "SingularExpansion":
        """Coarsen the error budget and drop the terms it absorbs."""
        return normalize(replace(self, error=coarsest(self.error, error)))

    def with_digits(self, digits: int) -> "SingularExpansion":
        return replace(self, digits=digits)

    def __add__(self, other):
        return add(self, other)

    def __neg__(self):
        return scale(self, -1)

    def __sub__(self, other):
        return add(self, scale(other, -1))

    def __mul__(self, other):
        if isinstance(other, SingularExpansion):
            return multiply(self, other)
        return scale(self, other)

    __rmul__ = __mul__

    def __str__(self) -> str:
        parts = []
        with mp.workdps(12):
            for t in self.terms:
                c = mpmath.nstr(to_mpf(t.coeff), 12)
                piece = c
                if t.alpha != 0:
                    piece += f"*(1-z)^({t.alpha})"
                if t.logpow:
                    piece += f"*L^{t.logpow}"
                parts.append(piece)
        if not self.error.exact:
            parts.append(str(self.error))
        return " + ".join(parts) if parts else "0"


def _merge(pairs: Iterable[tuple], digits: int, noise_digits: int | None = None) -> dict:
    """Sum coefficients sharing a (alpha, logpow) key; drop exact and numerical zeros.

    A sum is a numerical zero when it cancels to within 10^-(noise_digits-3)
    of its largest contribution (noise_digits defaults to digits).
    """
    sums: dict = {}
    scales: dict = {}
    with mp.workdps(digits):
        for key, c in pairs:
            c = as_number(c)
            sums[key] = sums[key] + c if key in sums else c
            if isinstance(c, mpf):
                scales[key] = max(scales.get(key, mpf(0)), abs(c))
        out = {}
        tol = mpf(10) ** (-(noise_digits or digits) + 3)
        for key, c in sums.items():
            if c == 0:
                continue
            if key in scales and isinstance(c, mpf) and abs(c) <= scales[key] * tol:
                continue
            out[key] = c
    return out


def _build(coeffs: dict, error: ErrorBudget, rho: Rho, digits: int) -> SingularExpansion:
    ekey = error.key
    items = sorted((k, c) for k, c in coeffs.items() if k < ekey)
    terms = tuple(SingularTerm(c, a, -nk) for (a, nk), c in items)
    return SingularExpansion(terms, error, rho, digits)


def normalize(e: SingularExpansion) -> SingularExpansion:
    """Merge like terms, strip zeros, sort by dominance and absorb dominated terms."""
    coeffs = _merge(((t.key, t.coeff) for t in e.terms), e.digits)
    return _build(coeffs, e.error, e.rho, e.digits)


def _check_rho(*exps: SingularExpansion) -> Rho:
    rho = exps[0].rho
    for e in exps[1:]:
        if e.rho != rho:
            raise MismatchedSingularityError(f"singularities differ: {rho} vs {e.rho}")
    return rho


def add(f: SingularExpansion, g: SingularExpansion) -> SingularExpansion:
    rho = _check_rho(f, g)
    digits = max(f.digits, g.digits)
    with mp.workdps(digits):
        coeffs = _merge([(t.key, t.coeff) for t in f.terms + g.terms], digits)
    return _build(coeffs, coarsest(f.error, g.error), rho, digits)


def add_all(exps: Sequence[SingularExpansion]) -> SingularExpansion:
    out = exps[0]
    for e in exps[1:]:
        out = add(out, e)
    return out


def scale(f: SingularExpansion, c) -> SingularExpansion:
    c = as_number(c)
    with mp.workdps(f.digits):
        coeffs = _merge([(t.key, t.coeff * c) for t in f.terms], f.digits)
    error = EXACT if c == 0 else f.error
    return _build(coeffs, error, f.rho, f.digits)


def _key_add(k1, k2):
    return (k1[0] + k2[0], k1[1] + k2[1])


def _error_from_key(key) -> ErrorBudget:
    return ErrorBudget(key[0], -key[1])


def multiply(f: SingularExpansion, g: SingularExpansion) -> SingularExpansion:
    """Ordinary product; the error is the coarsest of term-times-error cross products."""
    rho = _check_rho(f, g)
    digits = max(f.digits, g.digits)
    errors = [EXACT]
    if not g.error.exact:
        errors += [_error_from_key(_key_add(t.key, g.error.key)) for t in f.terms]
    if not f.error.exact:
        errors += [_error_from_key(_key_add(t.key, f.error.key)) for t in g.terms]
    if not f.error.exact and not g.error.exact:
        errors.append(_error_from_key(_key_add(f.error.key, g.error.key)))
    error = coarsest(*errors)
    ekey = error.key
    pairs = []
    with mp.workdps(digits):
        for s in f.terms:
            for t in g.terms:
                key = _key_add(s.key, t.key)
                if key < ekey:
                    if key[1] > 0 and key[0] != 0:
                        raise ValueError("product creates a negative power of L away from alpha = 0")
                    pairs.append((key, s.coeff * t.coeff))
        coeffs = _merge(pairs, digits)
    return _build(coeffs, error, rho, digits)


def power(f: SingularExpansion, m: int) -> SingularExpansion:
    if m < 0:
        raise ValueError("use reciprocal for negative powers")
    out = SingularExpansion.monomial(0, rho=f.rho, digits=f.digits)
    for _ in range(m):
        out = multiply(out, f)
    return out


# --------------------------------------------------------------------------
# reciprocal


def _series_mul(a: dict, b: dict, cutoff) -> dict:
    out: dict = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = _key_add(ka, kb)
            if k < cutoff:
                out[k] = out.get(k, 0) + ca * cb
    return out


def invert_keyed(coeffs: dict, error_key, order: int, digits: int):
    """Invert a series given as ``{key: coeff}`` with additive, dominance-ordered keys.

    Keys compare so that smaller means more dominant.  Returns the first
    ``order`` terms of the inverse and the key of its error (the first omitted
    term or the propagated input error, whichever dominates; None if exact).
    """
    if not coeffs:
        raise NoDominantTermError("cannot invert a zero expansion")
    keys = sorted(coeffs)
    lead_key = keys[0]
    with mp.workdps(digits + 5):
        inv_c = recip(coeffs[lead_key], digits + 5)
        neg_eps = {(k[0] - lead_key[0], k[1] - lead_key[1]): -coeffs[k] * inv_c for k in keys[1:]}
        prop = None if error_key is None else (error_key[0] - lead_key[0], error_key[1] - lead_key[1])
        cutoff = prop if prop is not None else (INF, 0)
        one = (Fraction(0), 0)
        total = {one: Fraction(1)}
        powm = {one: Fraction(1)}
        for _ in range(order):
            powm = _series_mul(powm, neg_eps, cutoff)
            if not powm:
                break
            for k, c in powm.items():
                total[k] = total.get(k, 0) + c
        total = {k: c for k, c in total.items() if c != 0}
        rel = sorted(total)
        candidates = [k for k in (rel[order] if len(rel) > order else None, prop) if k is not None]
        rel_err = min(candidates) if candidates else None
        shift = (-lead_key[0], -lead_key[1])
        out = {_key_add(k, shift): total[k] * inv_c for k in rel[:order]}
    with mp.workdps(digits):
        out = {k: (+c if isinstance(c, mpf) else c) for k, c in out.items()}
    return out, (None if rel_err is None else _key_add(rel_err, shift))


def reciprocal(f: SingularExpansion, order: int) -> SingularExpansion:
    """1/f truncated to ``order`` terms (or to the error propagated from f, if coarser).

    With dominant term ``c (1-z)^a L^k`` the inverse is ``(1/c)(1-z)^{-a} L^{-k}
    sum_m (-eps)^m`` where ``eps`` collects the relative corrections.  When
    the dominant term is ``c L`` the result is a descending series in 1/L.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    f.leading()
    coeffs = {t.key: t.coeff for t in f.terms}
    out, ekey = invert_keyed(coeffs, None if f.error.exact else f.error.key, order, f.digits)
    for a, nk in out:
        if nk > 0 and a != 0:
            raise ValueError("reciprocal creates a negative power of L away from alpha = 0")
    error = EXACT if ekey is None else _error_from_key(ekey)
    return _build(out, error, f.rho, f.digits)


# --------------------------------------------------------------------------
# calculus


def differentiate(f: SingularExpansion, r: int = 1) -> SingularExpansion:
    """r-th derivative in z, term by term, using L' = 1/(1-z)."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    out = f
    for _ in range(r):
        pairs = []
        with mp.workdps(out.digits):
            for t in out.terms:
                if t.logpow < 0:
                    raise ValueError("cannot differentiate negative powers of L")
                a, k = t.alpha, t.logpow
                if a != 0:
                    pairs.append(((a - 1, -k), -a * t.coeff))
                if k > 0:
                    pairs.append(((a - 1, -(k - 1)), k * t.coeff))
            coeffs = _merge(pairs, out.digits)
        out = _build(coeffs, out.error.shift(-1), out.rho, out.digits)
    return out


def antiderivative_terms(term: SingularTerm) -> list[tuple]:
    """Terms ``(coeff, alpha, logpow)`` of an antiderivative F of ``c (1-z)^a L^k``.

    For a != -1 the antiderivative is ``(-1)^(k+1) d^k/da^k [(1-z)^(a+1)/(a+1)]``,
    i.e. ``-sum_i k!/i! (a+1)^-(k-i+1) L^i (1-z)^(a+1)``; for a = -1 it is
    ``L^(k+1)/(k+1)``.
    """
    a, k, c = term.alpha, term.logpow, term.coeff
    if k < 0:
        raise ValueError("cannot integrate negative powers of L")
    if a == -1:
        return [(c * Fraction(1, k + 1), Fraction(0), k + 1)]
    b = a + 1
    return [(-c * Fraction(factorial(k), factorial(i)) / b ** (k - i + 1), b, i) for i in range(k + 1)]


def antiderivative_at_zero(term: SingularTerm):
    """F(0) for the antiderivative chosen in :func:`antiderivative_terms`."""
    a, k, c = term.alpha, term.logpow, term.coeff
    if a == -1:
        return Fraction(0)
    return -c * Fraction(factorial(k)) / (a + 1) ** (k + 1)


@dataclass(frozen=True)
class ConstantValue:
    """A known value for the regular part of the integral, ``int_0^1 [f - f_-]``."""

    value: object


@dataclass(frozen=True)
class Evaluator:
    """Closed-form value source: ``func(t)`` evaluates f at t in (0, 1) at ambient precision."""

    func: Callable


def integration_split(f: SingularExpansion):
    """Split f's terms into the divergent part f_- (alpha <= -1) and the rest."""
    minus = [t for t in f.terms if t.alpha <= -1]
    rest = [t for t in f.terms if t.alpha > -1]
    return minus, rest


def integrate(f: SingularExpansion, const_source=None) -> SingularExpansion:
    """Singular expansion of ``int_0^z f(t) dt``.

    If the error exponent A of f is below -1 the result is the term-by-term
    antiderivative (any constant is absorbed by the error).  Otherwise the
    constant

        L0 = -sum_{alpha_j <= -1} F_j(0) + int_0^1 [f - f_-]

    is added, with f_- the terms of exponent <= -1.  For an exact expansion
    L0 is known in closed form.  Otherwise ``const_source`` supplies the
    regular integral: a :class:`ConstantValue`, an :class:`Evaluator`
    (quadrature), or any object with a ``regular_integral(f, minus_terms,
    digits)`` method (series rules, see the summation module).
    """
    digits = f.digits
    pairs = []
    with mp.workdps(digits + 5):
        for t in f.terms:
            for c, a, k in antiderivative_terms(t):
                pairs.append(((a, -k), c))
        error = f.error
        need_constant = error.exact or error.aexp > -1
        if not error.exact:
            if error.aexp == -1:
                error = ErrorBudget(0, max(error.logpow, 0) + 1)
            else:
                error = error.shift(1)
        if need_constant:
            if error.exact:
                const = -sum((antiderivative_at_zero(t) for t in f.terms), Fraction(0))
            else:
                minus, rest = integration_split(f)
                const = -sum((antiderivative_at_zero(t) for t in minus), Fraction(0))
                const = const + _regular_integral(f, minus, const_source, digits)
            pairs.append(((Fraction(0), 0), const))
        coeffs = _merge(pairs, digits)
    with mp.workdps(digits):
        coeffs = {k: (+c if isinstance(c, mpf) else c) for k, c in coeffs.items()}
    return _build(coeffs, error, f.rho, digits)


def _regular_integral(f, minus, const_source, digits):
    if const_source is None:
        raise MissingConstSourceError(
            "the integration constant depends on the function and not only on its expansion; "
            "pass a const_source"
        )
    if isinstance(const_source, ConstantValue):
        return as_number(const_source.value)
    if isinstance(const_source, Evaluator):
        def regular(t):
            value = const_source.func(t)
            for term in minus:
                value -= to_mpf(term.coeff) * (1 - t) ** to_mpf(term.alpha) * (-mpmath.log(1 - t)) ** term.logpow
            return value

        with mp.workdps(digits + 10):
            return mpmath.quad(regular, [0, mpf(1) / 2, 1])
    if hasattr(const_source, "regular_integral"):
        return const_source.regular_integral(f, minus, digits)
    raise TypeError(f"unsupported const_source {const_source!r}")


# --------------------------------------------------------------------------
# change of variables


def rescale(f: SingularExpansion, rho: Rho) -> SingularExpansion:
    """Retag f as the expansion of a function whose singularity sits at ``rho``."""
    return replace(f, rho=rho)


def _exp_series(coeffs: list, n: int) -> list:
    """exp of a power series with zero constant term, first n coefficients."""
    out = [Fraction(1)] + [Fraction(0)] * (n - 1)
    # E' = A' E  =>  m e_m = sum_{j=1}^m j a_j e_{m-j}
    for m in range(1, n):
        s = 0
        for j in range(1, min(m, len(coeffs) - 1) + 1):
            s += j * coeffs[j] * out[m - j]
        out[m] = s / m
    return out


def w_power_coefficients(theta, n: int) -> list:
    """b_l(theta) with (w/u)^theta = sum_l b_l u^l, where w = -log(1-u) = sum u^l/l.

    Exact for rational theta, numeric (ambient precision) for mpf theta.
    """
    # log(w/u) = log(1 + u/2 + u^2/3 + ...)
    g = [Fraction(1, l + 1) for l in range(n)]
    # log of g (g_0 = 1) via d/du log g = g'/g
    logg = [Fraction(0)] * n
    for m in range(1, n):
        s = m * g[m]
        for j in range(1, m):
            s -= j * logg[j] * g[m - j]
        logg[m] = s / m
    if isinstance(theta, (int, Fraction)):
        theta = Fraction(theta)
    scaled = [theta * c for c in logg]
    return _exp_series(scaled, n)


def w_to_oneminusz(items: Iterable[tuple], error_aexp, digits: int = DEFAULT_DIGITS,
                   rho: Rho = UNIT) -> SingularExpansion:
    """Re-expand ``sum c w^theta + O(w^A)`` (w = -log z) in powers of (1-z)."""
    A = to_fraction(error_aexp) if error_aexp is not None else None
    pairs = []
    with mp.workdps(digits + 5):
        for c, theta in items:
            theta = to_fraction(theta)
            if A is None:
                raise ValueError("w_to_oneminusz needs a finite error exponent")
            n = int(mpmath.ceil(to_mpf(A - theta))) if A > theta else 0
            for l, b in enumerate(w_power_coefficients(theta, n)):
                pairs.append(((theta + l, 0), as_number(c) * b))
        coeffs = _merge(pairs, digits)
    return _build(coeffs, ErrorBudget(A, 0), rho, digits)


# --------------------------------------------------------------------------
# polylogarithms


def polylog_expansion(s, r: int = 0, aexp=4, digits: int = DEFAULT_DIGITS) -> SingularExpansion:
    """Singular expansion at z = 1 of Li_{s,r}(z) = sum_n (log n)^r n^(-s) z^n.

    Uses ``Li_s(z) = Gamma(1-s) w^(s-1) + sum_j (-1)^j/j! zeta(s-j) w^j`` with
    ``w = -log z`` and ``Li_{s,r} = (-1)^r d^r/ds^r Li_s``.  The s-derivatives
    of the coefficient functions are taken by central differences, while the
    derivatives of ``(1-z)^(s-1)`` produce the powers of L.  ``s`` must not
    be a positive integer.
    """
    s = to_fraction(s)
    if s.denominator == 1 and s >= 1:
        raise ValueError("polylog_expansion needs s not a positive integer")
    A = to_fraction(aexp)
    work = digits + 10
    with mp.workdps(work):
        pairs = []
        # singular part: Gamma(1-s) (1-z)^(s-1) sum_l b_l(s-1) (1-z)^l
        nl = int(mpmath.ceil(to_mpf(A - (s - 1)))) if A > s - 1 else 0
        for l in range(nl):
            if r == 0:
                c = mpmath.gamma(to_mpf(1 - s)) * to_mpf(w_power_coefficients(s - 1, l + 1)[l])
                pairs.append(((s - 1 + l, 0), c))
                continue

            def coeff_fn(x, l=l):
                return mpmath.gamma(1 - x) * w_power_coefficients(x - 1, l + 1)[l]

            for i in range(r + 1):
                d = central_difference(coeff_fn, s, r - i, work)
                c = (-1) ** r * comb(r, i) * (-1) ** i * d
                pairs.append(((s - 1 + l, -i), c))
        # regular part: (-1)^r sum_j (-1)^j/j! zeta^(r)(s-j) w^j
        nj = int(mpmath.ceil(to_mpf(A))) if A > 0 else 0
        for j in range(nj):
            if r == 0:
                z = mpmath.zeta(to_mpf(s - j))
            else:
                z = central_difference(mpmath.zeta, s - j, r, work)
            zc = (-1) ** r * (-1) ** j * z / factorial(j)
            for l, b in enumerate(w_power_coefficients(j, nj - j)):
                pairs.append(((Fraction(j + l), 0), zc * b))
        merged = _merge(pairs, work)
        if r > 0 and merged:
            # central differences leave noise where a coefficient vanishes identically
            floor_ = max(abs(c) for c in merged.values()) * mpf(10) ** (-digits)
            merged = {k: c for k, c in merged.items() if abs(c) > floor_}
        with mp.workdps(digits):
            coeffs = {k: +c for k, c in merged.items()}
    return _build(coeffs, ErrorBudget(A, r), UNIT, digits)


# --------------------------------------------------------------------------
# numerical evaluation and serialization


def evaluate(f: SingularExpansion, z, digits: int | None = None):
    """Sum of the retained terms at a point z < 1 of the rescaled variable."""
    digits = digits or f.digits
    with mp.workdps(digits + 5):
        u = 1 - to_mpf(z)
        L = -mpmath.log(u)
        total = mpf(0)
        for t in f.terms:
            total += to_mpf(t.coeff) * u ** to_mpf(t.alpha) * L**t.logpow
    with mp.workdps(digits):
        return +total


def format_decimal(c, digits: int) -> str:
    with mp.workdps(digits):
        return mpmath.nstr(to_mpf(c), digits)


def to_dict(f: SingularExpansion) -> dict:
    return {
        "rho": str(f.rho),
        "rho_value": format_decimal(f.rho.value(f.digits), f.digits),
        "terms": [
            {"coeff": format_decimal(t.coeff, f.digits), "alpha": str(t.alpha), "logpow": t.logpow}
            for t in f.terms
        ],
        "error": "exact" if f.error.exact else {"aexp": str(f.error.aexp), "logpow": f.error.logpow},
    }


def from_dict(data: dict, digits: int = DEFAULT_DIGITS) -> SingularExpansion:
    with mp.workdps(digits):
        terms = [SingularTerm(mpf(t["coeff"]), Fraction(t["alpha"]), int(t["logpow"])) for t in data["terms"]]
    err = data["error"]
    error = EXACT if err == "exact" else ErrorBudget(Fraction(err["aexp"]), int(err["logpow"]))
    return SingularExpansion(tuple(terms), error, Rho.parse(data["rho"]), digits)


def to_json(f: SingularExpansion) -> str:
    return json.dumps(to_dict(f), sort_keys=False)


def from_json(text: str, digits: int = DEFAULT_DIGITS) -> SingularExpansion:
    return from_dict(json.loads(text), digits)
