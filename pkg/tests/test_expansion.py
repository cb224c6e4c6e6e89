from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from mpmath import mp, mpf

from singcalc.expansion import (
    EXACT,
    ErrorBudget,
    MismatchedSingularityError,
    MissingConstSourceError,
    NoDominantTermError,
    Rho,
    SingularExpansion,
    SingularTerm,
    add,
    differentiate,
    evaluate,
    from_json,
    integrate,
    multiply,
    normalize,
    reciprocal,
    rescale,
    scale,
    to_json,
    w_power_coefficients,
    w_to_oneminusz,
)

E = SingularExpansion.from_terms


def pairs(f):
    return [(t.coeff, t.alpha, t.logpow) for t in f.terms]


def test_normalize_merges_like_terms():
    raw = SingularExpansion((SingularTerm(2, Fraction(1, 2)), SingularTerm(3, Fraction(1, 2))))
    f = normalize(raw)
    assert pairs(f) == [(5, Fraction(1, 2), 0)]


def test_normalize_absorbs_dominated_terms():
    f = E([(1, 2)], ErrorBudget(1))
    assert f.terms == () and f.error == ErrorBudget(1)


def test_normalize_orders_logs_first():
    f = E([(1, 0, 0), (1, 0, 1)])
    assert [t.logpow for t in f.terms] == [1, 0]


def test_products():
    assert pairs(multiply(E([(1, -1)]), E([(1, -1)]))) == [(1, -2, 0)]
    assert pairs(multiply(E([(1, -2)]), E([(1, 0, 1)]))) == [(1, -2, 1)]


def test_add_cancellation_keeps_coarser_error():
    f = E([(1, Fraction(-1, 2))], ErrorBudget(0))
    g = E([(-1, Fraction(-1, 2))], ErrorBudget(Fraction(1, 2)))
    s = add(f, g)
    assert s.terms == () and s.error == ErrorBudget(0)


def test_exactness_propagates():
    assert multiply(E([(1, -1)]), E([(2, 1)])).error == EXACT
    assert not multiply(E([(1, -1)]), E([(2, 1)], ErrorBudget(2))).is_exact


def test_mismatched_singularity():
    f = E([(1, -1)])
    g = rescale(E([(1, -1)]), Rho(Fraction(1, 4)))
    with pytest.raises(MismatchedSingularityError):
        add(f, g)


def test_reciprocal_of_monomial():
    assert pairs(reciprocal(E([(1, Fraction(-1, 2))]), 1)) == [(1, Fraction(1, 2), 0)]
    with pytest.raises(NoDominantTermError):
        reciprocal(SingularExpansion.zero(), 2)
    with pytest.raises(ValueError):
        reciprocal(E([(1, 0)]), 0)


def test_reciprocal_in_inverse_log_scale():
    with mp.workdps(40):
        K = mpf("0.8825424006106063735858257")
        f = E([(1 / mp.pi, 0, 1), (K, 0, 0)], ErrorBudget(Fraction(9, 10)), digits=40)
        g = reciprocal(f, 3)
        assert [t.logpow for t in g.terms] == [-1, -2, -3]
        expected = [mp.pi, -mp.pi**2 * K, mp.pi**3 * K**2]
        for t, c in zip(g.terms, expected):
            assert abs(t.coeff - c) < mpf(10) ** -35


def test_reciprocal_with_finite_value_at_one():
    with mp.workdps(40):
        q1 = mpf("1.3932039296856768591842463")
        f = E([(q1, 0), (-2 / mp.pi, Fraction(1, 2))], ErrorBudget(1), digits=40)
        g = reciprocal(f, 2)
        assert abs(g.coefficient(0) - 1 / q1) < mpf(10) ** -35
        assert abs(g.coefficient(Fraction(1, 2)) - 2 / (mp.pi * q1**2)) < mpf(10) ** -35
        assert g.error == ErrorBudget(1)


def test_differentiate_rules():
    assert pairs(differentiate(E([(1, Fraction(1, 2))]))) == [(Fraction(-1, 2), Fraction(-1, 2), 0)]
    assert pairs(differentiate(E([(1, 0, 1)]))) == [(1, -1, 0)]
    alpha, r = Fraction(7, 3), 3
    with mp.workdps(30):
        got = differentiate(E([(1, alpha)], digits=30), r).coefficient(alpha - r)
        want = (-1) ** r * mpmath.gamma(mpf(10) / 3) / mpmath.gamma(mpf(1) / 3)
        assert abs(sf_mpf(got) - want) < mpf(10) ** -25
    assert differentiate(E([(1, 1)], ErrorBudget(2, 1))).error == ErrorBudget(1, 1)


def test_integrate_examples():
    assert pairs(integrate(E([(1, -2)]))) == [(1, -1, 0), (-1, 0, 0)]
    assert pairs(integrate(E([(1, -1)]))) == [(1, 0, 1)]
    assert pairs(integrate(E([(1, Fraction(-3, 2))]))) == [(2, Fraction(-1, 2), 0), (-2, 0, 0)]


def test_integrate_needs_a_constant_source():
    with pytest.raises(MissingConstSourceError):
        integrate(E([(1, -2)], ErrorBudget(Fraction(1, 2))))
    # error below -1: the constant is absorbed and none is needed
    f = integrate(E([(1, -3)], ErrorBudget(Fraction(-3, 2))))
    assert pairs(f) == [(Fraction(1, 2), -2, 0)]


def test_w_power_matches_binomial_series():
    # (w/u)^theta = (1 + x)^theta, x = u/2 + u^2/3 + ...
    theta, n = Fraction(-1, 2), 6
    x = [Fraction(0)] + [Fraction(1, l + 1) for l in range(1, n)]
    total = [Fraction(1)] + [Fraction(0)] * (n - 1)
    power = [Fraction(1)] + [Fraction(0)] * (n - 1)
    binom = Fraction(1)
    for k in range(1, n):
        power = [sum(power[i] * x[m - i] for i in range(m + 1)) for m in range(n)]
        binom = binom * (theta - k + 1) / k
        total = [t + binom * p for t, p in zip(total, power)]
    assert w_power_coefficients(theta, n) == total
    assert total[:2] == [1, Fraction(-1, 4)]


def test_w_to_oneminusz():
    f = w_to_oneminusz([(1, Fraction(-1, 2))], Fraction(3, 2))
    assert pairs(f) == [(1, Fraction(-1, 2), 0), (Fraction(-1, 4), Fraction(1, 2), 0)]
    g = w_to_oneminusz([(1, 1)], 3)
    assert pairs(g) == [(1, 1, 0), (Fraction(1, 2), 2, 0)]


@pytest.mark.parametrize("theta", [Fraction(-1, 2), Fraction(1, 3), Fraction(-5, 4), 2])
def test_w_conversion_numerically(theta):
    A = theta + 4
    f = w_to_oneminusz([(1, theta)], A, digits=40)
    with mp.workdps(40):
        u = mpf(10) ** -3
        z = 1 - u
        direct = (-mpmath.log(z)) ** sf_mpf(theta)
        assert abs(evaluate(f, z, 40) - direct) <= 10 * u ** sf_mpf(A) * abs(direct) / u ** sf_mpf(theta)


def sf_mpf(x):
    return mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else mpf(x)


def test_rescale_retags_rho():
    f = rescale(E([(1, Fraction(-1, 2))]), Rho(Fraction(1, 4)))
    assert f.rho == Rho(Fraction(1, 4)) and pairs(f) == [(1, Fraction(-1, 2), 0)]


def test_rho_parse_and_print():
    for text in ("1/4", "1/e", "e", "2*e^2/3", "1/4*e"):
        r = Rho.parse(text)
        assert Rho.parse(str(r)) == r
    assert Rho.parse("1/e") == Rho(1, -1)


def test_json_round_trip():
    with mp.workdps(30):
        f = E([(mp.pi, Fraction(-3, 2), 1), (Fraction(1, 3), 0)], ErrorBudget(Fraction(1, 2), 2), digits=30)
    text = to_json(f)
    g = from_json(text, 30)
    assert to_json(g) == text
    assert g.error == f.error and [t.key for t in g.terms] == [t.key for t in f.terms]


def test_scale_by_zero_is_exact_zero():
    f = scale(E([(1, -1)], ErrorBudget(0)), 0)
    assert f.terms == () and f.is_exact


# ---------------------------------------------------------------- properties

alphas = st.fractions(min_value=-4, max_value=4, max_denominator=6)
coeffs = st.fractions(min_value=-10, max_value=10, max_denominator=12).filter(bool)
term = st.tuples(coeffs, alphas, st.integers(0, 2))
expansions = st.lists(term, min_size=1, max_size=5).map(lambda ts: E(ts))
log_free = st.lists(st.tuples(coeffs, alphas.filter(lambda a: a != -1)), min_size=1, max_size=5).map(
    lambda ts: E(ts))


@settings(max_examples=100, deadline=None)
@given(expansions)
def test_differentiate_inverts_integrate(f):
    assert differentiate(integrate(f)) == f


@settings(max_examples=100, deadline=None)
@given(log_free)
def test_log_free_round_trip_is_termwise(f):
    assert pairs(differentiate(integrate(f))) == pairs(f)


@settings(max_examples=100, deadline=None)
@given(expansions, expansions)
def test_leibniz(f, g):
    left = differentiate(multiply(f, g))
    right = add(multiply(differentiate(f), g), multiply(f, differentiate(g)))
    assert left == right


@settings(max_examples=100, deadline=None)
@given(log_free, st.integers(1, 5))
def test_reciprocal_property(f, order):
    g = reciprocal(f, order)
    leftover = add(multiply(f, g), E([(-1, 0)]))
    if len(g.terms) < order:
        assert leftover.terms == ()
        return
    # everything left over lies beyond the last retained relative order
    last = g.terms[-1].alpha - g.terms[0].alpha
    assert all(t.alpha > last for t in leftover.terms)
