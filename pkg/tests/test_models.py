import math
import warnings
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from mpmath import mp, mpf

from singcalc import TollSpec, oracle
from singcalc.models import (
    DivergentConstantError,
    UnsupportedDimensionError,
    analyze,
    bst_analyze,
    bst_constants,
    catalan_analyze,
    catalan_constants,
    cayley_expand,
    moment_pump,
    polya_analyze,
    snap_toll,
    stirling_analyze,
    unionfind_analyze,
    unionfind_constant,
)

from reference import _mpf

D = 30


def value(c):
    return _mpf(c) if isinstance(c, (int, Fraction)) else c


def row(a, k):
    t = a.terms[k]
    return float(value(t.coeff)), t.npow, t.logpow


def assert_rows(a, expected, tol=1e-20):
    for k, (c, npow, logpow) in enumerate(expected):
        got = a.terms[k]
        assert (got.npow, got.logpow) == (npow, logpow)
        with mp.workdps(D):
            assert abs(value(got.coeff) - c) < tol * max(1, abs(c))


# ---------------------------------------------------------------- table rows

def test_bst_linear_toll():
    # the tabulated row charges n + 1 per node; the unit toll adds exactly n
    with mp.workdps(D):
        g = +mp.euler
        expected = [(2, 1, 1), (2 * (g - 1) - 1, 1, 0), (2, 0, 1), (2 * g + 1, 0, 0)]
    assert_rows(bst_analyze(TollSpec.power(1), 4, D).fn_asym, expected)


def test_bst_quadratic_toll():
    with mp.workdps(D):
        expected = [(3, 2, 0), (-6, 1, 1), (10 - 6 * mp.euler, 1, 0)]
    assert_rows(bst_analyze(TollSpec.power(2), 4, D).fn_asym, expected)


def test_bst_log_toll():
    a = bst_analyze(TollSpec.log(), 5, D)
    with mp.workdps(D):
        K = mpf("1.20356491674961033428628333814873131775552838577096")
        expected = [(K, 1, 0), (-1, 0, 1), (K - 2, 0, 0), (mpf(-1) / 2, -1, 0), (mpf(1) / 9, -2, 0)]
    assert_rows(a.fn_asym, expected, 1e-25)


def test_catalan_rows():
    with mp.workdps(D):
        rpi = mpmath.sqrt(mp.pi)
        K = mpf("2.0254384677765738877135187391417652470652930617658")
        assert_rows(catalan_analyze(TollSpec.power(Fraction(1, 2)), 3, D).fn_asym, [(1 / rpi, 1, 1)])
        assert_rows(catalan_analyze(TollSpec.log(), 3, D).fn_asym, [(K, 1, 0), (-2 * rpi, Fraction(1, 2), 0)], 1e-25)
        alpha = mpf(2)
        lead = mpmath.gamma(alpha - mpf(1) / 2) / mpmath.gamma(alpha)
    assert_rows(catalan_analyze(TollSpec.power(2), 3, D).fn_asym, [(lead, Fraction(5, 2), 0)])


@pytest.mark.parametrize("alpha", [Fraction(2), Fraction(7, 4), Fraction(5, 2)])
def test_unionfind_power_rows(alpha):
    with mp.workdps(D):
        a = _mpf(alpha)
        lead = mpmath.gamma(a - mpf(1) / 2) / (mpmath.sqrt(2) * mpmath.gamma(a))
    assert_rows(unionfind_analyze(TollSpec.power(alpha), 3, D).fn_asym, [(lead, alpha + Fraction(1, 2), 0)])


def test_unionfind_square_root_row():
    with mp.workdps(D):
        lead = 1 / mpmath.sqrt(2 * mp.pi)
    assert_rows(unionfind_analyze(TollSpec.power(Fraction(1, 2)), 3, D).fn_asym, [(lead, 1, 1)])


def _fitted_linear_coefficient(toll, asym, count=5):
    """Least-squares fit of the exact means on the expansion's scales, leading coefficient only."""
    f = oracle.exact_unionfind(toll, 4001, "float").values
    keys = [(float(t.npow), t.logpow) for t in asym.terms[:count]]
    ns = np.arange(1000, 4001, 100, dtype=float)
    X = np.column_stack([ns ** p * np.log(ns) ** l / ns for p, l in keys])
    y = np.array([f[int(n)] for n in ns]) / ns
    return np.linalg.lstsq(X, y, rcond=None)[0][0]


@pytest.mark.parametrize("toll", [TollSpec.log(), TollSpec.power(Fraction(1, 4))], ids=["log", "n^1/4"])
def test_unionfind_constant_against_exact_means(toll):
    a = unionfind_analyze(toll, 4, D)
    lead = row(a.fn_asym, 0)[0]
    assert abs(_fitted_linear_coefficient(toll, a.fn_asym) / lead - 1) < 1e-6
    if toll.kind == "log":
        K = float(a.constants["Khat'_0"].value)
        assert abs(lead - K / 2) < 1e-12


# ---------------------------------------------------------------- constants

def test_bst_log_constant():
    c = bst_constants(TollSpec.log(), 50)
    assert c.provenance == "mellin"
    with mp.workdps(60):
        assert abs(c.value - mpf("1.20356491674961033428628333814873131775552838577096")) < mpf(10) ** -45


def test_catalan_log_constant():
    c = catalan_constants(TollSpec.log(), 50)
    with mp.workdps(60):
        assert abs(c.value - mpf("2.0254384677765738877135187391417652470652930617658")) < mpf(10) ** -45


def _bst_half_by_euler_maclaurin(N=20000):
    f = lambda x: 2 * math.sqrt(x) / ((x + 1) * (x + 2))  # noqa: E731
    head = sum(f(n) for n in range(1, N + 1))
    # antiderivative of 2 sqrt(x) (1/(x+1) - 1/(x+2))
    F = lambda x: 2 * (2 * math.sqrt(2) * math.atan(math.sqrt(x / 2)) - 2 * math.atan(math.sqrt(x)))  # noqa: E731
    tail = 2 * math.pi * (math.sqrt(2) - 1) - F(N)
    h = 1e-3
    return head + tail - f(N) / 2 - (f(N + h) - f(N - h)) / (2 * h) / 12


def _catalan_quarter_by_tail_closure(alpha=0.25, N=100000):
    head, q = 0.0, 1.0
    for n in range(1, N + 1):
        q *= (2 * n - 1) / (2 * n)
        head += n ** alpha / (n + 1) * q
    # q_n sqrt(pi n) = 1 - 1/(8n) + 1/(128 n^2) + ..., 1/(n+1) = n^-1 (1 - 1/n + ...)
    e = [1, -1 / 8, 1 / 128, 5 / 1024, -21 / 32768]
    c = [sum(e[i] * (-1) ** (k - i) for i in range(k + 1)) for k in range(5)]
    tail = 0.0
    for k, ck in enumerate(c):
        p = 1.5 - alpha + k
        tail += ck / math.sqrt(math.pi) * (N ** (1 - p) / (p - 1) - N ** -p / 2 + p * N ** (-p - 1) / 12)
    return head + tail


def test_bst_half_constant():
    c = bst_constants(TollSpec.power(Fraction(1, 2)), D)
    assert abs(float(c.value) - _bst_half_by_euler_maclaurin()) < 1e-12


def test_catalan_quarter_constant():
    c = catalan_constants(TollSpec.power(Fraction(1, 4)), D)
    assert abs(float(c.value) - _catalan_quarter_by_tail_closure()) < 1e-12


def test_constant_preconditions():
    with pytest.raises(ValueError):
        bst_constants(TollSpec.power(1))
    with pytest.raises(ValueError):
        catalan_constants(TollSpec.power(Fraction(1, 2)))
    with pytest.raises(DivergentConstantError):
        unionfind_constant(TollSpec.power(Fraction(1, 2)))


def test_constant_serialization():
    d = bst_analyze(TollSpec.log(), 3, D).to_dict()
    assert d["model"] == "bst" and d["toll"] == TollSpec.log().label()
    assert {"singular", "asymptotics", "constants"} <= d.keys()
    assert d["constants"][0]["provenance"] in ("series", "mellin", "closed-form")
    assert d["constants"][0]["value"].startswith("1.2035649167496")


# ---------------------------------------------------------------- Cayley tree

def test_cayley_coefficients():
    c = cayley_expand(8, D)
    assert c.d[0] == 1 and c.d[2] == Fraction(2, 3)
    with mp.workdps(D):
        assert abs(c.d[1] + mpmath.sqrt(2)) < mpf(10) ** -25
    assert c.taylor[3] == Fraction(3, 2)


def test_cayley_singular_expansion_matches_taylor():
    c = cayley_expand(12, D)
    assert c.taylor[3] == Fraction(3, 2)
    with mp.workdps(D):
        h = mpf("0.1")
        z = (1 - h**2) / mp.e
        # n^(n-1)/n! z^n decays like 0.99^n n^-3/2 at this point
        logz = mpmath.log(z)
        series = sum(mpmath.exp((n - 1) * mpmath.log(n) - mpmath.loggamma(n + 1) + n * logz) for n in range(1, 5000))
        singular = sum(value(d) * h**m for m, d in enumerate(c.d))
        # the truncated expansion errs by about h^13
        assert abs(series - singular) < mpf(10) ** -12
        assert abs(series - z * mpmath.exp(series)) < mpf(10) ** -20


def test_cayley_order_limit():
    with pytest.raises(ValueError):
        cayley_expand(31)


# ---------------------------------------------------------------- Polya

def test_polya_leading_terms():
    with mp.workdps(D):
        one = polya_analyze(1, 2, D)
        assert abs(one.pn_asym.terms[0].coeff - 1 / (2 * mpmath.sqrt(mp.pi))) < mpf(10) ** -25
        two = polya_analyze(2, 2, D)
        K = mpf("0.8825424006106063735858257")
        assert abs(two.constants["K"].value - K) < mpf(10) ** -24
        assert abs(two.pn_asym.coefficient(-1, -2) - mp.pi) < mpf(10) ** -25
        assert abs(two.pn_asym.coefficient(-1, -3) + 2 * mp.pi * (mp.euler + mp.pi * K)) < mpf(10) ** -22
        three = polya_analyze(3, 2, D)
        Q1 = mp.pi / mpmath.gamma(mpf(3) / 4) ** 4
        assert abs(three.constants["Q(1)"].value - Q1) < mpf(10) ** -25
        assert abs(three.pn_asym.terms[0].coeff - 1 / (mp.pi ** 1.5 * Q1**2)) < mpf(10) ** -25


def test_polya_dimension_four():
    with pytest.raises(UnsupportedDimensionError):
        polya_analyze(4)


# ---------------------------------------------------------------- Stirling

def test_stirling_factorial():
    s = stirling_analyze("factorial", 4, D)
    with mp.workdps(D):
        assert abs(s.constants["log sqrt(2 pi)"].value - mpmath.log(2 * mp.pi) / 2) < mpf(10) ** -25
    assert [(t.npow, t.logpow) for t in s.asym.terms[:3]] == [(1, 1), (1, 0), (0, 1)]
    predicted = sum(row(s.asym, k)[0] * 20.0 ** float(t.npow) * math.log(20) ** t.logpow
                    for k, t in enumerate(s.asym.terms))
    assert abs(predicted - math.lgamma(21)) < 1e-8
    assert abs(math.lgamma(21) - 42.3356164607534850) < 1e-12


def test_stirling_superfactorial():
    s = stirling_analyze("superfactorial", 4, D)
    heads = {(t.npow, t.logpow): row(s.asym, k)[0] for k, t in enumerate(s.asym.terms)}
    assert heads[(2, 1)] == 0.5 and heads[(1, 1)] == 0.5 and heads[(2, 0)] == -0.25
    assert abs(heads[(0, 1)] - 1 / 12) < 1e-25
    with mp.workdps(D):
        A = mpmath.exp(mpf(1) / 12 - mpmath.zeta(-1, derivative=1))
        assert abs(s.constants["A"].value - A) < mpf(10) ** -25


def test_stirling_kind_check():
    with pytest.raises(ValueError):
        stirling_analyze("double")


# ---------------------------------------------------------------- moments

def test_bst_second_moment_leading_order():
    a = moment_pump("bst", TollSpec.power(1), 2, 2, 20)
    lead = a.terms[0]
    assert (lead.npow, lead.logpow) == (2, 2)
    assert abs(float(lead.coeff) - 4) < 1e-15


def test_moment_pump_preconditions():
    with pytest.raises(ValueError):
        moment_pump("bst", TollSpec.power(1), s=3)
    with pytest.raises(ValueError):
        moment_pump("unionfind", TollSpec.power(1))
    with pytest.raises(ValueError):
        moment_pump("bst", TollSpec.power(1), depth=0)


# ---------------------------------------------------------------- dispatch

def test_analyze_dispatch():
    assert analyze("bst", TollSpec.power(2), 2, D).model == "bst"
    with pytest.raises(ValueError):
        analyze("quadtree", TollSpec.power(1))
    with pytest.raises(ValueError):
        bst_analyze(TollSpec.power(1), 0)


def test_snap_toll():
    near = TollSpec.power(Fraction(3, 2) + Fraction(1, 10**11))
    with pytest.warns(UserWarning):
        assert snap_toll(near, "catalan") == TollSpec.power(Fraction(3, 2))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert snap_toll(TollSpec.power(Fraction(3, 2)), "catalan").alpha == Fraction(3, 2)
        assert snap_toll(TollSpec.log(), "bst").kind == "log"
    with pytest.warns(UserWarning):
        assert snap_toll(TollSpec.power(2 - Fraction(1, 10**10)), "bst").alpha == 2
