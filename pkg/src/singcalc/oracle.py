"""Exact recurrences and an exact power-series engine.

Everything here computes Taylor coefficients directly, without asymptotics,
so it serves as ground truth for the symbolic path.  Three arithmetic modes
are available:

``exact``  Fractions (or ints); slow but exact, for small N.
``mp``     mpmath reals at a given precision.
``float``  numpy float64, used by the O(N^2) recurrences at large N.

The quadratic recurrences are rewritten in scaled variables (Catalan numbers
over 4^n, Cayley coefficients times e^-n) so that float64 never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import mpmath
import numpy as np
from mpmath import mp, mpf

from .specfun import DEFAULT_DIGITS, to_mpf
from .tolls import TollSpec

MODES = ("exact", "mp", "float")
EXACT_CUTOFF = 300


class SeriesError(ValueError):
    """Raised for invalid power-series operations (division by a series with zero constant term, ...)."""


# --------------------------------------------------------------------------
# the provider type


@dataclass(frozen=True)
class SeriesProvider:
    """Coefficients c_0..c_{N-1} of a power series, immutable once built."""

    values: tuple
    mode: str = "exact"
    digits: int = DEFAULT_DIGITS
    name: str = ""
    asymptotics: object = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n):
        return self.values[n]

    def __iter__(self):
        return iter(self.values)

    def coefficients(self, count: int) -> list:
        if count > len(self.values):
            raise IndexError(f"{self.name or 'series'} only has {len(self.values)} coefficients")
        return list(self.values[:count])

    def as_mpf(self, digits: int | None = None) -> list:
        digits = digits or self.digits
        with mp.workdps(digits):
            return [to_mpf(v) if not isinstance(v, float) else mpf(v) for v in self.values]

    def to_csv(self, digits: int | None = None) -> str:
        digits = digits or self.digits
        lines = ["n,value"]
        for n, v in enumerate(self.values):
            if isinstance(v, (int, Fraction)):
                text = str(v)
            elif isinstance(v, float):
                text = repr(v)
            else:
                with mp.workdps(digits):
                    text = mpmath.nstr(v, digits)
            lines.append(f"{n},{text}")
        return "\n".join(lines) + "\n"


def provider(values, name: str = "", digits: int = DEFAULT_DIGITS) -> SeriesProvider:
    values = list(values)
    if any(isinstance(v, float) for v in values):
        mode = "float"
    elif any(isinstance(v, mpf) for v in values):
        mode = "mp"
    else:
        mode = "exact"
        values = [Fraction(v) for v in values]
    return SeriesProvider(tuple(values), mode, digits, name)


# --------------------------------------------------------------------------
# series engine


def _unify(*series: SeriesProvider):
    """Common mode and digits; converts exact inputs to mpf when any input is numeric."""
    modes = {s.mode for s in series}
    digits = max(s.digits for s in series)
    if modes == {"exact"}:
        return [list(s.values) for s in series], "exact", digits
    if "float" in modes:
        return [[float(v) for v in s.values] for s in series], "float", digits
    return [s.as_mpf(digits) for s in series], "mp", digits


def _ctx(mode: str, digits: int):
    return mp.workdps(digits + 5) if mode == "mp" else _NullCtx()


class _NullCtx:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _mul_lists(a: list, b: list, N: int, zero) -> list:
    out = []
    for n in range(N):
        s = zero
        for k in range(max(0, n - len(b) + 1), min(n, len(a) - 1) + 1):
            s += a[k] * b[n - k]
        out.append(s)
    return out


def _zero(mode):
    return Fraction(0) if mode == "exact" else (0.0 if mode == "float" else mpf(0))


def mul(f: SeriesProvider, g: SeriesProvider, N: int | None = None) -> SeriesProvider:
    (a, b), mode, digits = _unify(f, g)
    N = N or min(len(a), len(b))
    with _ctx(mode, digits):
        out = _mul_lists(a, b, N, _zero(mode))
    return SeriesProvider(out, mode, digits, "mul")


def div(f: SeriesProvider, g: SeriesProvider, N: int | None = None) -> SeriesProvider:
    (a, b), mode, digits = _unify(f, g)
    N = N or min(len(a), len(b))
    if b[0] == 0:
        raise SeriesError("division by a series with zero constant term")
    with _ctx(mode, digits):
        out = []
        for n in range(N):
            s = a[n] if n < len(a) else _zero(mode)
            for k in range(max(0, n - len(b) + 1), n):
                s -= out[k] * b[n - k]
            out.append(s / b[0])
    return SeriesProvider(out, mode, digits, "div")


def _exact_sqrt(q: Fraction) -> Fraction:
    num, den = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if num * num != q.numerator or den * den != q.denominator:
        raise SeriesError(f"constant term {q} is not a rational square")
    return Fraction(num, den)


def sqrt(f: SeriesProvider, N: int | None = None) -> SeriesProvider:
    (a,), mode, digits = _unify(f)
    N = N or len(a)
    if a[0] <= 0:
        raise SeriesError("square root needs a positive constant term")
    with _ctx(mode, digits):
        if mode == "exact":
            g0 = _exact_sqrt(a[0])
        elif mode == "float":
            g0 = math.sqrt(a[0])
        else:
            g0 = mpmath.sqrt(a[0])
        out = [g0]
        for n in range(1, N):
            s = a[n] if n < len(a) else _zero(mode)
            for k in range(1, n):
                s -= out[k] * out[n - k]
            out.append(s / (2 * g0))
    return SeriesProvider(out, mode, digits, "sqrt")


def derivative(f: SeriesProvider) -> SeriesProvider:
    return SeriesProvider([n * f[n] for n in range(1, len(f))], f.mode, f.digits, "derivative")


def integrate(f: SeriesProvider, N: int | None = None) -> SeriesProvider:
    """Primitive vanishing at 0."""
    N = N or len(f) + 1
    (a,), mode, digits = _unify(f)
    with _ctx(mode, digits):
        out = [_zero(mode)] + [a[n - 1] / n for n in range(1, N)]
    return SeriesProvider(out, mode, digits, "integrate")


def dlog(f: SeriesProvider, N: int | None = None) -> SeriesProvider:
    """Logarithmic derivative f'/f."""
    N = N or len(f) - 1
    return div(derivative(f), f, N)


def hadamard(f: SeriesProvider, g: SeriesProvider, N: int | None = None) -> SeriesProvider:
    (a, b), mode, digits = _unify(f, g)
    N = N or min(len(a), len(b))
    with _ctx(mode, digits):
        out = [a[n] * b[n] for n in range(N)]
    return SeriesProvider(out, mode, digits, "hadamard")


def compose(f: SeriesProvider, g: SeriesProvider, N: int | None = None) -> SeriesProvider:
    """f(g(z)) for g with zero constant term (Horner scheme)."""
    (a, b), mode, digits = _unify(f, g)
    N = N or min(len(a), len(b))
    if b[0] != 0:
        raise SeriesError("composition needs an inner series with zero constant term")
    zero = _zero(mode)
    with _ctx(mode, digits):
        out = [zero] * N
        for k in range(min(len(a), N) - 1, -1, -1):
            out = _mul_lists(out, b, N, zero)
            out[0] += a[k]
    return SeriesProvider(out, mode, digits, "compose")


def revert(g: SeriesProvider, N: int | None = None) -> SeriesProvider:
    """Compositional inverse h with g(h(z)) = z, by Lagrange inversion."""
    (b,), mode, digits = _unify(g)
    N = N or len(b)
    if b[0] != 0 or b[1] == 0:
        raise SeriesError("reversion needs g(0) = 0 and g'(0) != 0")
    zero = _zero(mode)
    one = Fraction(1) if mode == "exact" else (1.0 if mode == "float" else mpf(1))
    with _ctx(mode, digits):
        shifted = SeriesProvider(b[1:] + [zero], mode, digits)
        phi = div(SeriesProvider([one], mode, digits), shifted, N)  # w / g(w)
        out = [zero] * N
        power = [one] + [zero] * (N - 1)
        for n in range(1, N):
            power = _mul_lists(power, list(phi.values), N, zero)
            out[n] = power[n - 1] / n
    return SeriesProvider(out, mode, digits, "revert")


# --------------------------------------------------------------------------
# tolls


def _toll_list(toll, N: int, mode: str, digits: int) -> list:
    if isinstance(toll, TollSpec):
        return toll.values(N, mode, digits)
    if callable(toll):
        raw = [toll(n) for n in range(N)]
    else:
        raw = list(toll)[:N]
        if len(raw) < N:
            raise ValueError("toll sequence too short")
    if mode == "exact":
        return [Fraction(v) for v in raw]
    if mode == "float":
        return [float(v) for v in raw]
    with mp.workdps(digits):
        return [to_mpf(v) for v in raw]


def _pick_mode(toll, N: int, mode: str, fallback: str) -> str:
    if mode != "auto":
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        return mode
    rational = not isinstance(toll, TollSpec) or toll.is_rational
    return "exact" if rational and N <= EXACT_CUTOFF else fallback


# --------------------------------------------------------------------------
# tree recurrences


def exact_bst(toll, N: int, mode: str = "auto", digits: int = 2 * DEFAULT_DIGITS) -> SeriesProvider:
    """f_n = t_n + (2/n) sum_{k<n} f_k, n = 0..N-1 (prefix sums, O(N))."""
    mode = _pick_mode(toll, N, mode, "mp")
    t = _toll_list(toll, N, mode, digits)
    with _ctx(mode, digits):
        f = [t[0]]
        prefix = t[0]
        for n in range(1, N):
            value = t[n] + 2 * prefix / n
            f.append(value)
            prefix += value
    return SeriesProvider(f, mode, digits, "bst")


def catalan_numbers(N: int) -> list:
    out = [1]
    for n in range(1, N):
        out.append(out[-1] * 2 * (2 * n - 1) // (n + 1))
    return out


def _scaled_catalan(N: int) -> np.ndarray:
    """C_n / 4^n in float64."""
    c = np.empty(N)
    c[0] = 1.0
    for n in range(1, N):
        c[n] = c[n - 1] * (2 * n - 1) / (2 * (n + 1))
    return c


def exact_catalan(toll, N: int, mode: str = "auto", digits: int = 2 * DEFAULT_DIGITS) -> SeriesProvider:
    """f_n = t_n + sum_k (C_k C_{n-1-k}/C_n)(f_k + f_{n-1-k}).

    Exact mode runs F_n = C_n f_n = C_n t_n + 2 sum_k C_{n-1-k} F_k; the float
    mode uses a_n = f_n C_n/4^n, for which a_n = c_n t_n + (1/2) sum_k c_{n-1-k} a_k.
    """
    mode = _pick_mode(toll, N, mode, "float")
    t = _toll_list(toll, N, mode, digits)
    if mode == "float":
        c = _scaled_catalan(N)
        t = np.asarray(t, dtype=float)
        a = np.zeros(N)
        for n in range(1, N):
            a[n] = c[n] * t[n] + 0.5 * np.dot(c[n - 1::-1], a[:n])
        return SeriesProvider((a / c).tolist(), "float", digits, "catalan")
    C = catalan_numbers(N)
    with _ctx(mode, digits):
        F = [t[0]]
        for n in range(1, N):
            s = t[n] * C[n]
            acc = _zero(mode)
            for k in range(n):
                acc += C[n - 1 - k] * F[k]
            F.append(s + 2 * acc)
        f = [F[n] / C[n] for n in range(N)]
    return SeriesProvider(f, mode, digits, "catalan")


def cayley_coefficients(N: int) -> list:
    """T_n = n^(n-1)/n!."""
    return [Fraction(0)] + [Fraction(n ** (n - 1), factorial(n)) for n in range(1, N)]


def cayley_square_coefficients(N: int) -> list:
    """[z^n] T(z)^2 = 2 n^(n-2) (n-1)/n!."""
    out = [Fraction(0), Fraction(0)]
    for n in range(2, N):
        out.append(Fraction(2 * n ** (n - 2) * (n - 1), factorial(n)))
    return out[:N]


def _scaled_cayley(N: int) -> np.ndarray:
    """T_n e^-n in float64."""
    tau = np.zeros(N)
    for n in range(1, N):
        tau[n] = math.exp((n - 1) * math.log(n) - n - math.lgamma(n + 1))
    return tau


def unionfind_weights(n: int) -> list:
    """p_{n,k} = binom(n,k) k^(k-1) (n-k)^(n-k-1) / (2(n-1) n^(n-2)), k = 1..n-1, exactly."""
    den = 2 * (n - 1) * n ** (n - 2)
    return [Fraction(comb(n, k) * k ** (k - 1) * (n - k) ** (n - k - 1), den) for k in range(1, n)]


def exact_unionfind(toll, N: int, mode: str = "auto", digits: int = 2 * DEFAULT_DIGITS) -> SeriesProvider:
    """f_1 = t_1, f_n = t_n + sum_k p_{n,k}(f_k + f_{n-k}) for n >= 2 (f_0 = 0).

    By symmetry f_n = t_n + (n!/((n-1) n^(n-2))) sum_k A_k T_{n-k}, A_k = f_k T_k.
    The float mode works with T_n e^-n and fixes the row normalization by
    sum_k p_{n,k} = 1.
    """
    mode = _pick_mode(toll, N, mode, "float")
    t = _toll_list(toll, N, mode, digits)
    if mode == "float":
        tau = _scaled_cayley(N)
        t = np.asarray(t, dtype=float)
        f = np.zeros(N)
        if N > 1:
            f[1] = t[1]
        for n in range(2, N):
            rev = tau[n - 1:0:-1]  # tau_{n-k}, k = 1..n-1
            weights = tau[1:n] * rev
            f[n] = t[n] + 2 * np.dot(weights, f[1:n]) / weights.sum()
        return SeriesProvider(f.tolist(), "float", digits, "unionfind")
    T = cayley_coefficients(N)
    with _ctx(mode, digits):
        f = [t[0]] + ([t[1]] if N > 1 else [])
        for n in range(2, N):
            acc = _zero(mode)
            for k in range(1, n):
                acc += f[k] * (T[k] * T[n - k] if mode == "exact" else to_mpf(T[k] * T[n - k]))
            factor = Fraction(factorial(n), (n - 1) * n ** (n - 2))
            f.append(t[n] + (factor if mode == "exact" else to_mpf(factor)) * acc)
    return SeriesProvider(f, mode, digits, "unionfind")


def split_probabilities(model: str, n: int) -> list:
    """[(k, n-a-k, p_{n,k})] exactly."""
    if model == "bst":
        return [(k, n - 1 - k, Fraction(1, n)) for k in range(n)]
    if model == "catalan":
        C = catalan_numbers(n + 1)
        return [(k, n - 1 - k, Fraction(C[k] * C[n - 1 - k], C[n])) for k in range(n)]
    if model == "unionfind":
        return [(k, n - k, p) for k, p in zip(range(1, n), unionfind_weights(n))]
    raise ValueError(f"unknown model {model!r}")


MEAN_ORACLES = {"bst": exact_bst, "catalan": exact_catalan, "unionfind": exact_unionfind}


def _float_weights(model: str, n: int, aux) -> tuple:
    if model == "bst":
        k = np.arange(n)
        return k, n - 1 - k, np.full(n, 1.0 / n)
    if model == "catalan":
        c = aux
        k = np.arange(n)
        return k, n - 1 - k, c[:n] * c[n - 1::-1] / (4 * c[n])
    tau = aux
    k = np.arange(1, n)
    w = tau[1:n] * tau[n - 1:0:-1]
    return k, n - k, w / w.sum()


def exact_moments(model: str, toll, s: int, N: int, mode: str = "auto",
                  digits: int = 2 * DEFAULT_DIGITS) -> list:
    """Providers for E[X_n^j], j = 0..s, with X_n = t_n + X_K + X'_{n-a-K}.

    mu_n^(s) = sum_k p_{n,k} sum_{i+j+l=s} s!/(i! j! l!) t_n^i mu_k^(j) mu_{n-a-k}^(l).
    """
    if s > 3:
        raise ValueError("moments are supported up to order 3")
    if model not in MEAN_ORACLES:
        raise ValueError(f"unknown model {model!r}")
    mode = _pick_mode(toll, N, mode, "float")
    t = _toll_list(toll, N, mode, digits)
    orders = range(s + 1)
    if mode == "float":
        return _float_moments(model, np.asarray(t, dtype=float), s, N, digits)
    one = Fraction(1) if mode == "exact" else mpf(1)
    zero = _zero(mode)
    mu = [[zero] * N for _ in orders]
    with _ctx(mode, digits):
        for n in range(N):
            if n == 0 or (model == "unionfind" and n == 1):
                base = t[n] if n == 1 else zero
                for j in orders:
                    mu[j][n] = base**j if j else one
                continue
            splits = split_probabilities(model, n)
            for order in orders:
                total = zero
                for i in range(order + 1):
                    ti = t[n] ** i
                    for j in range(order - i + 1):
                        l = order - i - j
                        mult = factorial(order) // (factorial(i) * factorial(j) * factorial(l))
                        acc = zero
                        for k, other, p in splits:
                            acc += (p if mode == "exact" else to_mpf(p)) * mu[j][k] * mu[l][other]
                        total += mult * ti * acc
                mu[order][n] = total
    return [SeriesProvider(mu[j], mode, digits, f"{model}-moment-{j}") for j in orders]


def _float_moments(model: str, t: np.ndarray, s: int, N: int, digits: int) -> list:
    aux = _scaled_catalan(N) if model == "catalan" else (_scaled_cayley(N) if model == "unionfind" else None)
    mu = np.zeros((s + 1, N))
    for n in range(N):
        if n == 0 or (model == "unionfind" and n == 1):
            base = t[n] if n == 1 else 0.0
            mu[:, n] = [base**j if j else 1.0 for j in range(s + 1)]
            continue
        k, other, p = _float_weights(model, n, aux)
        for order in range(s + 1):
            total = 0.0
            for i in range(order + 1):
                for j in range(order - i + 1):
                    l = order - i - j
                    mult = factorial(order) // (factorial(i) * factorial(j) * factorial(l))
                    total += mult * t[n] ** i * np.dot(p * mu[j, k], mu[l, other])
            mu[order, n] = total
    return [SeriesProvider(mu[j].tolist(), "float", digits, f"{model}-moment-{j}") for j in range(s + 1)]


# --------------------------------------------------------------------------
# Polya walks


def polya_return_probabilities(d: int, N: int, mode: str = "exact") -> SeriesProvider:
    """q_n = (4^-n binom(2n, n))^d, the probability of being at the origin at time 2n."""
    if mode == "exact":
        return SeriesProvider([Fraction(comb(2 * n, n), 4**n) ** d for n in range(N)], "exact", DEFAULT_DIGITS, "q")
    q = np.empty(N)
    q[0] = 1.0
    for n in range(1, N):
        q[n] = q[n - 1] * ((2 * n - 1) / (2 * n)) ** d
    return SeriesProvider(q.tolist(), "float", DEFAULT_DIGITS, "q")


def polya_first_return(d: int, N: int, mode: str = "auto") -> SeriesProvider:
    """p_n from (1 - sum p_n z^n)^-1 = sum q_n z^n, i.e. p_n = q_n - sum_{k=1}^{n-1} p_k q_{n-k}.

    The exact mode runs on integers scaled by 4^(dn).
    """
    if d < 1 or d > 4:
        raise ValueError("dimension must be between 1 and 4")
    if mode == "auto":
        mode = "exact" if N <= 1500 else "float"
    if mode == "exact":
        Q = [comb(2 * n, n) ** d for n in range(N)]
        P = [0] * N
        for n in range(1, N):
            acc = Q[n]
            for k in range(1, n):
                acc -= P[k] * Q[n - k]
            P[n] = acc
        return SeriesProvider([Fraction(P[n], 4 ** (d * n)) for n in range(N)], "exact", DEFAULT_DIGITS, "polya")
    q = np.asarray(polya_return_probabilities(d, N, "float").values)
    p = np.zeros(N)
    for n in range(1, N):
        p[n] = q[n] - np.dot(p[1:n], q[n - 1:0:-1])
    return SeriesProvider(p.tolist(), "float", DEFAULT_DIGITS, "polya")


def polya_closed_form_d1(n: int) -> Fraction:
    """p_n = binom(2n-2, n-1) / (n 2^(2n-1)) for the one-dimensional walk."""
    return Fraction(comb(2 * n - 2, n - 1), n * 2 ** (2 * n - 1))
