from fractions import Fraction
from math import comb, factorial

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from singcalc import TollSpec, oracle
from singcalc.models import unionfind_analyze
from singcalc.oracle import SeriesError, SeriesProvider, provider

N_ = TollSpec.power(1)


def harmonic(n):
    return sum(Fraction(1, k) for k in range(1, n + 1))


def test_bst_hand_values():
    f = oracle.exact_bst(N_, 6, "exact")
    assert [f[1], f[2], f[3]] == [1, 3, Fraction(17, 3)]
    shifted = oracle.exact_bst(lambda n: n + 1 if n else 0, 501, "exact")
    assert shifted[2] == 5
    assert all(shifted[n] == 2 * (n + 1) * (harmonic(n + 1) - 1) for n in range(0, 501, 7))
    assert all(v == 0 for v in oracle.exact_bst(lambda n: 0, 40))


def test_catalan_hand_values():
    f = oracle.exact_catalan(N_, 6, "exact")
    assert f[1] == 1 and f[2] == 3
    # f_3 = 3 + (C0C2 + C1C1 + C2C0)/C3 weights: (2/5)(0+3) + (1/5)(1+1) + (2/5)(3+0)
    assert f[3] == 3 + Fraction(2, 5) * 3 + Fraction(1, 5) * 2 + Fraction(2, 5) * 3


@pytest.mark.parametrize("model", ["bst", "catalan", "unionfind"])
def test_split_probabilities_sum_to_one(model):
    for n in range(2, 201, 9):
        assert sum(p for _, _, p in oracle.split_probabilities(model, n)) == 1


def test_unionfind_identity():
    for n in range(2, 201):
        total = sum(comb(n, k) * k ** (k - 1) * (n - k) ** (n - k - 1) for k in range(1, n))
        assert total == 2 * (n - 1) * n ** (n - 2)


def test_unionfind_hand_values():
    delta2 = lambda n: 1 if n == 2 else 0  # noqa: E731
    f = oracle.exact_unionfind(delta2, 5, "exact")
    assert f[1] == 0 and f[2] == 1 and f[3] == 1


def test_unionfind_log_linear_constant():
    f = oracle.exact_unionfind(TollSpec.log(), 3001, "float")
    half_k = float(unionfind_analyze(TollSpec.log(), 3, 30).fn_asym.coefficient(1))
    # remove the sqrt(n) correction with a second exact value
    n1, n2 = 1500, 3000
    c = (f[n2] * n1**0.5 - f[n1] * n2**0.5) / (n2 * n1**0.5 - n1 * n2**0.5)
    assert abs(c / half_k - 1) < 1e-3


@pytest.mark.parametrize("oracle_fn,cutoff", [(oracle.exact_catalan, 120), (oracle.exact_unionfind, 120)])
def test_float_mode_tracks_exact_mode(oracle_fn, cutoff):
    exact = oracle_fn(TollSpec.power(2), cutoff, "exact")
    approx = oracle_fn(TollSpec.power(2), cutoff, "float")
    assert all(abs(float(e) - a) <= 1e-11 * abs(float(e)) for e, a in zip(exact, approx))


def test_bst_mp_mode_tracks_exact_mode():
    exact = oracle.exact_bst(TollSpec.power(2), 300, "exact")
    approx = oracle.exact_bst(TollSpec.power(2), 300, "mp", 40)
    with mp.workdps(40):
        assert all(abs(mpf(e.numerator) / e.denominator - a) < mpf(10) ** -30 * max(1, a) for e, a in zip(exact, approx))


# ---------------------------------------------------------------- moments

@pytest.mark.parametrize("model", ["bst", "catalan", "unionfind"])
def test_moment_basics(model):
    toll = TollSpec.power(1)
    mu = oracle.exact_moments(model, toll, 2, 40, "exact")
    assert all(v == 1 for v in mu[0])
    mean = oracle.MEAN_ORACLES[model](toll, 40, "exact")
    assert list(mu[1]) == list(mean)
    assert all(m2 - m1 * m1 >= 0 for m1, m2 in zip(mu[1], mu[2]))


def test_bst_second_moment_at_two():
    mu = oracle.exact_moments("bst", TollSpec.power(1), 2, 4, "exact")
    assert mu[2][2] == 9


def test_float_moments_track_exact():
    exact = oracle.exact_moments("catalan", TollSpec.power(1), 2, 60, "exact")
    approx = oracle.exact_moments("catalan", TollSpec.power(1), 2, 60, "float")
    assert all(abs(float(e) - a) <= 1e-11 * float(e) for e, a in zip(exact[2], approx[2]))


def test_moment_order_limit():
    with pytest.raises(ValueError):
        oracle.exact_moments("bst", N_, 4, 10)


# ---------------------------------------------------------------- series engine

def test_catalan_by_square_root():
    root = oracle.sqrt(provider([1, -4] + [0] * 8))
    # C(z) = (1 - sqrt(1 - 4z)) / (2z)
    numer = [Fraction(1) - root[0]] + [-c for c in root.values[1:]]
    C = [numer[n + 1] / 2 for n in range(8)]
    assert C[:6] == [1, 1, 2, 5, 14, 42]


def test_catalan_functional_equation():
    # f = t + 2 z C f for the normalized mean of toll n, n <= 100
    N = 101
    C = oracle.catalan_numbers(N)
    f = oracle.exact_catalan(N_, N, "exact")
    F = provider([f[n] * C[n] for n in range(N)])
    zC = provider([0] + C[: N - 1])
    t = provider([n * C[n] for n in range(N)])
    rhs = oracle.mul(zC, F, N)
    assert all(F[n] == t[n] + 2 * rhs[n] for n in range(N))


def test_cayley_by_reversion():
    N = 51
    w_exp = provider([0] + [Fraction((-1) ** (k - 1), factorial(k - 1)) for k in range(1, N)])
    T = oracle.revert(w_exp, N)
    assert all(T[n] == Fraction(n ** (n - 1), factorial(n)) for n in range(1, N))
    assert list(oracle.cayley_coefficients(N)) == list(T)


def test_series_errors():
    with pytest.raises(SeriesError):
        oracle.div(provider([1, 2]), provider([0, 1]))
    with pytest.raises(SeriesError):
        oracle.compose(provider([1, 1]), provider([1, 1]))


small = st.lists(st.fractions(-5, 5, max_denominator=7), min_size=6, max_size=6)


@settings(max_examples=50)
@given(small, small, small)
def test_ring_axioms(a, b, c):
    A, B, Cc = provider(a), provider(b), provider(c)
    assert oracle.mul(oracle.mul(A, B), Cc).values == oracle.mul(A, oracle.mul(B, Cc)).values
    BC = provider([x + y for x, y in zip(b, c)])
    left = oracle.mul(A, BC)
    right = [x + y for x, y in zip(oracle.mul(A, B), oracle.mul(A, Cc))]
    assert list(left) == right
    if b[0] != 0:
        assert list(oracle.mul(oracle.div(A, B), B)) == list(A)


# ---------------------------------------------------------------- Polya walks

def test_polya_d1():
    p = oracle.polya_first_return(1, 60, "exact")
    assert p[1] == Fraction(1, 2) and p[2] == Fraction(1, 8)
    assert all(p[n] == oracle.polya_closed_form_d1(n) for n in range(1, 60))


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_polya_partial_sums_below_one(d):
    p = oracle.polya_first_return(d, 80, "exact")
    partial = Fraction(0)
    for n in range(1, 80):
        assert p[n] >= 0
        partial += p[n]
        assert partial <= 1


@pytest.mark.parametrize("d", [1, 2, 3])
def test_polya_inversion(d):
    N = 60
    p = oracle.polya_first_return(d, N, "exact")
    q = oracle.polya_return_probabilities(d, N, "exact")
    one_minus_p = provider([1] + [-p[n] for n in range(1, N)])
    assert list(oracle.mul(one_minus_p, q)) == [1] + [0] * (N - 1)


def test_polya_d3_escape_probability():
    p = oracle.polya_first_return(3, 4001, "float")
    with mp.workdps(30):
        limit = float(1 - mpmath.gamma(mpf(3) / 4) ** 4 / mp.pi)
    partials = [sum(p.values[1:n]) for n in (1000, 2000, 4001)]
    assert partials[0] < partials[1] < partials[2] < limit
    assert limit - partials[2] < 0.01
    assert abs(limit - 0.282230) < 1e-6


def test_polya_dimension_limit():
    with pytest.raises(ValueError):
        oracle.polya_first_return(5, 10)


def test_provider_modes_and_csv():
    assert provider([1, 2]).mode == "exact"
    assert provider([1.0, 2]).mode == "float"
    sp = SeriesProvider((Fraction(1, 3), Fraction(2)), "exact")
    assert sp.to_csv() == "n,value\n0,1/3\n1,2\n"
    with pytest.raises(IndexError):
        sp.coefficients(3)
