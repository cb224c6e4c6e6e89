"""From singular expansions to coefficient asymptotics and back.

Coefficient asymptotics are descending sums of ``c n^beta (log n)^k`` with
an explicit ``O(n^e (log n)^B)`` remainder and an exponential prefactor
``exp_factor**n``.  Negative powers of ``log n`` occur only on the
``1/n`` scale, where ``L(z)^{-m}`` lands.

The engine behind :func:`transfer` is the Stirling expansion of
``Gamma(n - alpha) / Gamma(n + 1)``, which is exact in rationals when alpha is
rational.  Log factors come from differentiating that expansion in alpha.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, floor

import mpmath
from mpmath import mp, mpf

from .expansion import (
    EXACT,
    INF,
    ErrorBudget,
    NoDominantTermError,
    Rho,
    SingularExpansion,
    SingularTerm,
    UNIT,
    _exp_series,
    _merge,
    add_all,
    as_number,
    format_decimal,
    invert_keyed,
    polylog_expansion,
    scale,
)
from .specfun import DEFAULT_DIGITS, central_difference, recip_gamma, to_fraction, to_mpf

INVERSE_LOG_TERMS = 6


class UnsupportedTermError(ValueError):
    """Raised for singular terms outside the transferable scale."""


class NonMatchableTermError(ValueError):
    """Raised when no basis element leads with a given coefficient term."""


# --------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class CoeffTerm:
    coeff: object
    npow: Fraction
    logpow: int = 0

    def __post_init__(self):
        object.__setattr__(self, "npow", to_fraction(self.npow))
        object.__setattr__(self, "coeff", as_number(self.coeff))

    @property
    def key(self):
        # smaller key = more dominant, and keys add under multiplication
        return (-self.npow, -self.logpow)


@dataclass(frozen=True)
class CoeffBound:
    """``O(n^npow (log n)^logpow)``; ``npow = None`` means exact."""

    npow: Fraction | None
    logpow: int = 0

    def __post_init__(self):
        if self.npow is not None:
            object.__setattr__(self, "npow", to_fraction(self.npow))

    @property
    def exact(self) -> bool:
        return self.npow is None

    @property
    def key(self):
        return (INF, 0) if self.npow is None else (-self.npow, -self.logpow)

    @classmethod
    def from_key(cls, key) -> "CoeffBound":
        if key is None or key[0] == INF:
            return EXACT_BOUND
        return cls(-key[0], -key[1])

    def __str__(self) -> str:
        if self.exact:
            return "exact"
        return f"O(n^{self.npow} log^{self.logpow} n)"


EXACT_BOUND = CoeffBound(None)


@dataclass(frozen=True)
class CoeffAsymptotics:
    terms: tuple = ()
    error: CoeffBound = EXACT_BOUND
    exp_factor: Rho = UNIT
    digits: int = DEFAULT_DIGITS

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))

    @classmethod
    def from_terms(cls, items, error: CoeffBound = EXACT_BOUND, exp_factor: Rho = UNIT,
                   digits: int = DEFAULT_DIGITS) -> "CoeffAsymptotics":
        """Build from ``(coeff, npow[, logpow])`` tuples, normalized."""
        pairs = []
        for t in items:
            t = t if isinstance(t, CoeffTerm) else CoeffTerm(*t)
            pairs.append((t.key, t.coeff))
        return _build(_merge(pairs, digits), error, exp_factor, digits)

    @property
    def is_exact(self) -> bool:
        return self.error.exact

    def leading(self) -> CoeffTerm:
        if not self.terms:
            raise NoDominantTermError("the coefficient asymptotics are zero")
        return self.terms[0]

    def coefficient(self, npow, logpow: int = 0):
        npow = to_fraction(npow)
        for t in self.terms:
            if t.npow == npow and t.logpow == logpow:
                return t.coeff
        return Fraction(0)

    def truncate(self, error: CoeffBound) -> "CoeffAsymptotics":
        coarser = min((self.error, error), key=lambda b: b.key)
        return _build({t.key: t.coeff for t in self.terms}, coarser, self.exp_factor, self.digits)

    def __add__(self, other):
        return add(self, other)

    def __neg__(self):
        return scale_asym(self, -1)

    def __sub__(self, other):
        return add(self, scale_asym(other, -1))

    def __mul__(self, other):
        if isinstance(other, CoeffAsymptotics):
            return multiply(self, other)
        return scale_asym(self, other)

    __rmul__ = __mul__

    def __str__(self) -> str:
        parts = []
        for t in self.terms:
            piece = mpmath.nstr(_mp(t.coeff, 12), 12)
            if t.npow != 0:
                piece += f"*n^({t.npow})"
            if t.logpow:
                piece += f"*log(n)^{t.logpow}"
            parts.append(piece)
        if not self.error.exact:
            parts.append(str(self.error))
        body = " + ".join(parts) if parts else "0"
        if self.exp_factor != UNIT:
            body = f"({self.exp_factor})^n * ({body})"
        return body


def _mp(c, digits):
    with mp.workdps(digits):
        return to_mpf(c)


def _build(coeffs: dict, error: CoeffBound, exp_factor: Rho, digits: int) -> CoeffAsymptotics:
    ekey = error.key
    items = sorted((k, c) for k, c in coeffs.items() if k < ekey)
    terms = tuple(CoeffTerm(c, -nb, -nk) for (nb, nk), c in items)
    return CoeffAsymptotics(terms, error, exp_factor, digits)


# --------------------------------------------------------------------------
# arithmetic


def _check_factor(a: CoeffAsymptotics, b: CoeffAsymptotics) -> None:
    if a.exp_factor != b.exp_factor:
        raise ValueError(f"exponential factors differ: {a.exp_factor} vs {b.exp_factor}")


def add(a: CoeffAsymptotics, b: CoeffAsymptotics) -> CoeffAsymptotics:
    _check_factor(a, b)
    digits = max(a.digits, b.digits)
    with mp.workdps(digits):
        coeffs = _merge([(t.key, t.coeff) for t in a.terms + b.terms], digits)
    error = min((a.error, b.error), key=lambda e: e.key)
    return _build(coeffs, error, a.exp_factor, digits)


def scale_asym(a: CoeffAsymptotics, c) -> CoeffAsymptotics:
    c = as_number(c)
    with mp.workdps(a.digits):
        coeffs = _merge([(t.key, t.coeff * c) for t in a.terms], a.digits)
    return _build(coeffs, EXACT_BOUND if c == 0 else a.error, a.exp_factor, a.digits)


def _kadd(k1, k2):
    return (k1[0] + k2[0], k1[1] + k2[1])


def multiply(a: CoeffAsymptotics, b: CoeffAsymptotics) -> CoeffAsymptotics:
    """Termwise product; the exponential factors multiply."""
    digits = max(a.digits, b.digits)
    errs = [EXACT_BOUND.key]
    if not b.error.exact:
        errs += [_kadd(t.key, b.error.key) for t in a.terms]
    if not a.error.exact:
        errs += [_kadd(t.key, a.error.key) for t in b.terms]
    if not a.error.exact and not b.error.exact:
        errs.append(_kadd(a.error.key, b.error.key))
    ekey = min(errs)
    pairs = []
    with mp.workdps(digits):
        for s in a.terms:
            for t in b.terms:
                k = _kadd(s.key, t.key)
                if k < ekey:
                    pairs.append((k, s.coeff * t.coeff))
        coeffs = _merge(pairs, digits)
    return _build(coeffs, CoeffBound.from_key(ekey), a.exp_factor * b.exp_factor, digits)


def reciprocal_series(a: CoeffAsymptotics, order: int) -> CoeffAsymptotics:
    """1/a_n as a descending expansion with ``order`` terms."""
    if order < 1:
        raise ValueError("order must be at least 1")
    a.leading()
    coeffs = {t.key: t.coeff for t in a.terms}
    out, ekey = invert_keyed(coeffs, None if a.error.exact else a.error.key, order, a.digits)
    return _build(out, CoeffBound.from_key(ekey), a.exp_factor.inverse(), a.digits)


def evaluate_asym(a: CoeffAsymptotics, n, digits: int | None = None, with_factor: bool = False):
    """Sum of the retained terms at n (optionally including ``exp_factor**n``)."""
    digits = digits or a.digits
    with mp.workdps(digits + 10):
        n = to_mpf(n)
        logn = mpmath.log(n)
        total = mpf(0)
        for t in a.terms:
            total += to_mpf(t.coeff) * n ** to_mpf(t.npow) * logn**t.logpow
        if with_factor:
            total *= a.exp_factor.value(digits + 10) ** n
    with mp.workdps(digits):
        return +total


def error_magnitude(a: CoeffAsymptotics, n, digits: int = 20):
    """|n^e (log n)^B| for the error bound of a (0 when exact)."""
    if a.error.exact:
        return mpf(0)
    with mp.workdps(digits):
        n = to_mpf(n)
        return n ** to_mpf(a.error.npow) * mpmath.log(n) ** a.error.logpow


# --------------------------------------------------------------------------
# the Gamma-ratio expansion


@lru_cache(maxsize=None)
def bernoulli_numbers(n: int) -> tuple:
    """B_0..B_n with B_1 = -1/2."""
    B = [Fraction(0)] * (n + 1)
    B[0] = Fraction(1)
    for m in range(1, n + 1):
        B[m] = -sum(comb(m + 1, j) * B[j] for j in range(m)) / (m + 1)
    return tuple(B)


def bernoulli_poly(n: int, x):
    B = bernoulli_numbers(n)
    return sum(comb(n, j) * B[j] * x ** (n - j) for j in range(n + 1))


def gamma_ratio_coeffs(alpha, depth: int) -> list:
    """e_0..e_{depth-1} with Gamma(n-alpha)/Gamma(n+1) ~ n^(-alpha-1) sum_k e_k n^-k.

    Exact Fractions for rational alpha; mpf (ambient precision) otherwise.
    """
    if isinstance(alpha, int):
        alpha = Fraction(alpha)
    d = [0]
    for m in range(1, depth):
        b = bernoulli_poly(m + 1, -alpha) - bernoulli_numbers(m + 1)[m + 1]
        d.append((-1) ** (m + 1) * b / (m * (m + 1)))
    return _exp_series(d, depth)


def _is_nonneg_int(alpha: Fraction) -> bool:
    return alpha.denominator == 1 and alpha >= 0


def binomial_asym(alpha, depth: int, digits: int = DEFAULT_DIGITS) -> CoeffAsymptotics:
    """Descending expansion of [z^n](1-z)^alpha = binom(n-alpha-1, n) to ``depth`` terms."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    alpha = to_fraction(alpha)
    if _is_nonneg_int(alpha):
        return CoeffAsymptotics((), EXACT_BOUND, UNIT, digits)
    e = gamma_ratio_coeffs(alpha, depth)
    with mp.workdps(digits + 5):
        rg = recip_gamma(-alpha, digits + 5)
        pairs = [((alpha + 1 + k, 0), rg * to_mpf(ek)) for k, ek in enumerate(e)]
        coeffs = _merge(pairs, digits)
    error = CoeffBound(-alpha - 1 - depth, 0)
    # for alpha = -m the coefficients form a polynomial of degree m-1 in n
    if alpha.denominator == 1 and depth >= -alpha:
        error = EXACT_BOUND
    return _build(coeffs, error, UNIT, digits)


def _log_term_coeffs(alpha: Fraction, k: int, depth: int, digits: int) -> dict:
    """Coefficients of n^(-alpha-1-m) log^i n in [z^n](1-z)^alpha L^k, keyed by (npow key, log key)."""

    def g(a):
        # g_m(a) = e_m(a) / Gamma(-a)
        e = gamma_ratio_coeffs(a, depth)
        r = mpmath.rgamma(-a)
        return [r * x for x in e]

    derivs = [central_difference(g, alpha, j, digits + 5) for j in range(k + 1)]
    pairs = []
    with mp.workdps(digits + 5):
        # differences of an identically vanishing g_m (alpha a nonnegative
        # integer, or m past the end of a polynomial) leave pure noise
        scale = max(abs(x) for d in derivs for x in d)
        floor_ = scale * mpf(10) ** (-digits)
        derivs = [[x if abs(x) > floor_ else 0 for x in d] for d in derivs]
        for m in range(depth):
            for i in range(k + 1):
                c = comb(k, i) * (-1) ** (k - i) * derivs[k - i][m]
                pairs.append(((alpha + 1 + m, -i), c))
    return pairs


@lru_cache(maxsize=None)
def _recip_gamma_derivs_at_zero(count: int, digits: int) -> tuple:
    return tuple(central_difference(mpmath.rgamma, 0, j, digits) for j in range(count + 1))


def _inverse_log_pairs(m: int, terms: int, digits: int) -> list:
    """[z^n] L^-m ~ (1/n) sum_{j>=1} binom(-m, j) (1/Gamma)^(j)(0) (log n)^(-m-j)."""
    R = _recip_gamma_derivs_at_zero(terms, digits + 5)
    pairs = []
    with mp.workdps(digits + 5):
        for j in range(1, terms + 1):
            binom = Fraction(1)
            for i in range(j):
                binom *= Fraction(-m - i, i + 1)
            pairs.append(((Fraction(1), m + j), binom * R[j]))
    return pairs


def transfer(f: SingularExpansion, depth: int = 3, digits: int | None = None,
             inverse_log_terms: int = INVERSE_LOG_TERMS) -> CoeffAsymptotics:
    """Coefficient asymptotics of an expansion, ``depth`` terms per singular term."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    digits = digits or f.digits
    work = digits + 5
    pairs = []
    bounds = []
    for t in f.terms:
        a, k = t.alpha, t.logpow
        if k < 0:
            if a != 0:
                raise UnsupportedTermError("negative powers of L are only transferable at alpha = 0")
            J = max(1, min(depth, inverse_log_terms))
            unit = _inverse_log_pairs(-k, J, digits)
            bounds.append((Fraction(1), -k + J + 1))
        elif k == 0:
            b = binomial_asym(a, depth, work)
            unit = [(s.key, s.coeff) for s in b.terms]
            bounds.append(b.error.key)
        else:
            unit = _log_term_coeffs(a, k, depth, digits)
            bounds.append((a + 1 + depth, -k))
        with mp.workdps(work):
            pairs += [(key, t.coeff * c) for key, c in unit]
    if not f.error.exact:
        A, B = f.error.aexp, f.error.logpow
        bounds.append((Fraction(1), -(B - 1)) if A == 0 and B < 0 else (A + 1, -B))
    ekey = min(bounds) if bounds else EXACT_BOUND.key
    with mp.workdps(work):
        coeffs = _merge(pairs, digits)
    with mp.workdps(digits):
        coeffs = {key: (+c if isinstance(c, mpf) else c) for key, c in coeffs.items()}
    return _build(coeffs, CoeffBound.from_key(ekey), f.rho.inverse(), digits)


# --------------------------------------------------------------------------
# exact coefficients


def singular_coefficients(alpha, logpow: int, count: int, digits: int = DEFAULT_DIGITS) -> list:
    """[z^n](1-z)^alpha L^logpow for n = 0..count-1.

    Runs the recurrence c_n = c_{n-1}(n-1-alpha-eps)/n on truncated power
    series in eps; (1-z)^alpha L^k = (-1)^k k! [eps^k](1-z)^(alpha+eps).
    Exact Fractions for rational alpha without logs, mpf otherwise.
    """
    if logpow < 0:
        raise UnsupportedTermError("exact coefficients need a nonnegative power of L")
    alpha = to_fraction(alpha)
    k = logpow
    if k == 0:
        out = [Fraction(1)]
        for n in range(1, count):
            out.append(out[-1] * (n - 1 - alpha) / n)
        return out[:count]
    with mp.workdps(digits + 10):
        a = to_mpf(alpha)
        jet = [mpf(1)] + [mpf(0)] * k
        sign = (-1) ** k * factorial(k)
        out = [sign * jet[k]]
        for n in range(1, count):
            base = (n - 1 - a) / n
            inv = mpf(1) / n
            jet = [jet[i] * base - (jet[i - 1] * inv if i else 0) for i in range(k + 1)]
            out.append(sign * jet[k])
    with mp.workdps(digits):
        return [+c for c in out[:count]]


def expansion_coefficients(f: SingularExpansion, count: int) -> list:
    """Exact Taylor coefficients (n < count) of the function that *is* the sum of f's terms."""
    total = [mpf(0)] * count
    with mp.workdps(f.digits + 10):
        for t in f.terms:
            cs = singular_coefficients(t.alpha, t.logpow, count, f.digits + 10)
            c = to_mpf(t.coeff)
            total = [x + c * to_mpf(y) for x, y in zip(total, cs)]
    with mp.workdps(f.digits):
        return [+x for x in total]


# --------------------------------------------------------------------------
# reconstruction


def _basis_for(npow: Fraction, logpow: int) -> tuple:
    """(alpha, L power) of the standard basis element leading with n^npow log^logpow."""
    if npow.denominator == 1 and npow < 0:
        # negative integer npow: (1-z)^m L^(k+1) leads with n^(-m-1) log^k n
        alpha = -npow - 1
        if logpow + 1 < 0 and alpha != 0:
            raise NonMatchableTermError(f"no basis element leads with n^{npow} log^{logpow} n")
        if logpow == -1:
            raise NonMatchableTermError("n^-1 (log n)^-1 is not led by any power of L")
        return alpha, logpow + 1
    if logpow < 0:
        raise NonMatchableTermError(f"no basis element leads with n^{npow} log^{logpow} n")
    return -npow - 1, logpow


def _working_error(a: CoeffAsymptotics, depth: int) -> tuple:
    if not a.error.exact:
        return a.error.key
    if not a.terms:
        return EXACT_BOUND.key
    lowest = min(t.npow for t in a.terms)
    return (-(lowest - depth), 0)


def _singular_error(ekey, exact: bool) -> ErrorBudget:
    if exact or ekey[0] == INF:
        return EXACT
    e, B = -ekey[0], -ekey[1]
    if e == -1 and B < 0:
        return ErrorBudget(0, B + 1)
    return ErrorBudget(-e - 1, B)


def reconstruct(a: CoeffAsymptotics, basis: str = "standard", depth: int = 4) -> SingularExpansion:
    """Singular expansion whose coefficients have the asymptotics a (no polynomial part).

    Greedy triangular peeling: the dominant remaining term picks the basis
    element leading with it, whose full transfer is subtracted.  When a is
    exact the peeling runs ``depth`` orders of n below its last term.
    """
    if basis == "polylog":
        return _reconstruct_polylog(a, depth)
    if basis != "standard":
        raise ValueError(f"unknown basis {basis!r}")
    digits = a.digits
    ekey = _working_error(a, depth)
    remaining = {t.key: t.coeff for t in a.terms}
    chosen = []
    exact = a.error.exact
    for _ in range(10_000):
        remaining = {k: c for k, c in remaining.items() if k < ekey}
        if not remaining:
            break
        lead = min(remaining)
        npow, logpow = -lead[0], -lead[1]
        alpha, k = _basis_for(npow, logpow)
        span = (-npow) + ekey[0] if ekey[0] != INF else 0
        elem_depth = max(1, floor(span) + 1)
        elem = transfer(SingularExpansion.monomial(alpha, k, digits=digits), elem_depth, digits + 5)
        lc = elem.coefficient(npow, logpow)
        if lc == 0:
            raise NonMatchableTermError(f"basis element (1-z)^{alpha} L^{k} does not lead with n^{npow} log^{logpow} n")
        with mp.workdps(digits + 5):
            num = remaining[lead]
            c = num / lc if isinstance(num, Fraction) and isinstance(lc, Fraction) else to_mpf(num) / to_mpf(lc)
            pairs = list(remaining.items()) + [(s.key, -c * s.coeff) for s in elem.terms]
            remaining = _merge(pairs, digits + 5, noise_digits=digits - 5)
        remaining.pop(lead, None)
        exact = exact and elem.error.exact
        chosen.append((c, alpha, k))
    else:
        raise NonMatchableTermError("peeling did not terminate")
    rho = a.exp_factor.inverse()
    with mp.workdps(digits):
        terms = [SingularTerm(+c if isinstance(c, mpf) else c, al, k) for c, al, k in chosen]
    error = _singular_error(ekey, exact)
    return SingularExpansion.from_terms(terms, error, rho, digits)


def _reconstruct_polylog(a: CoeffAsymptotics, depth: int) -> SingularExpansion:
    """sum c Li_{-beta,k}: the coefficients of Li_{s,r} are exactly n^-s log^r n."""
    digits = a.digits
    ekey = _working_error(a, depth)
    err = _singular_error(ekey, False)
    aexp = err.aexp if not err.exact else Fraction(depth)
    parts = []
    for t in a.terms:
        if t.npow == -1 and t.logpow == 0:
            # Li_1 = L exactly
            parts.append(SingularExpansion.monomial(0, 1, t.coeff, digits=digits))
            continue
        if t.logpow < 0 or (t.npow.denominator == 1 and t.npow < 0):
            raise NonMatchableTermError(f"n^{t.npow} log^{t.logpow} n has no polylogarithm with a singular expansion here")
        li = polylog_expansion(-t.npow, t.logpow, aexp, digits)
        parts.append(scale(li, t.coeff))
    if not parts:
        return SingularExpansion.zero(err, rho=a.exp_factor.inverse(), digits=digits)
    out = add_all(parts).truncate(err)
    return replace(out, rho=a.exp_factor.inverse())


# --------------------------------------------------------------------------
# serialization


def to_dict(a: CoeffAsymptotics) -> dict:
    return {
        "exp_factor": str(a.exp_factor),
        "exp_factor_value": format_decimal(a.exp_factor.value(a.digits), a.digits),
        "terms": [
            {"coeff": format_decimal(t.coeff, a.digits), "npow": str(t.npow), "logpow": t.logpow}
            for t in a.terms
        ],
        "error": "exact" if a.error.exact else {"npow": str(a.error.npow), "logpow": a.error.logpow},
    }


def from_dict(data: dict, digits: int = DEFAULT_DIGITS) -> CoeffAsymptotics:
    with mp.workdps(digits):
        terms = [CoeffTerm(mpf(t["coeff"]), Fraction(t["npow"]), int(t["logpow"])) for t in data["terms"]]
    err = data["error"]
    error = EXACT_BOUND if err == "exact" else CoeffBound(Fraction(err["npow"]), int(err["logpow"]))
    return CoeffAsymptotics(tuple(terms), error, Rho.parse(data["exp_factor"]), digits)


def to_json(a: CoeffAsymptotics) -> str:
    return json.dumps(to_dict(a))


def from_json(text: str, digits: int = DEFAULT_DIGITS) -> CoeffAsymptotics:
    return from_dict(json.loads(text), digits)
