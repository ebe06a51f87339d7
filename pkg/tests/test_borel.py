import math
import random
from fractions import Fraction as F

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from conway_analysis.borel import (
    ContinuationModel,
    FormalPowerSeries,
    borel_plane_integrate,
    borel_sum,
    borel_transform,
    factorial_series,
    formal_laplace,
    gevrey1_certificate,
    laplace_quadrature,
    least_term_error_constant,
    least_term_sum,
    pade_continue,
    pv_laplace,
)
from conway_analysis.errors import DomainError, NotGevrey1Error, PadeRankError, PoleOnPathError
from conway_analysis.special import lngamma_coefficient
from conway_analysis.transseries import TMono, ts_from_terms, ts_integrate

from helpers import e1_continued_fraction


def p_series(values):
    return FormalPowerSeries(list(values), plane="p")


GEOMETRIC = FormalPowerSeries(lambda k: F(1), plane="p")
ALTERNATING = FormalPowerSeries(lambda k: F((-1) ** k), plane="p")


def e_x_e1(x):
    return math.exp(x) * e1_continued_fraction(x)


def test_borel_transform_examples():
    assert borel_transform(factorial_series()).coeffs(8) == [1] * 8
    assert borel_transform(FormalPowerSeries([1], plane="x")).coeffs(3) == [1, 0, 0]
    with pytest.raises(DomainError):
        borel_transform(GEOMETRIC)


def test_formal_laplace_examples():
    assert formal_laplace(GEOMETRIC).coeffs(6) == [math.factorial(k) for k in range(6)]
    assert formal_laplace(p_series([1])).coeffs(2) == [1, 0]


@given(st.lists(st.fractions(max_denominator=20), min_size=32, max_size=32))
def test_round_trip(values):
    series = FormalPowerSeries(values, plane="x")
    assert formal_laplace(borel_transform(series)).coeffs(32) == series.coeffs(32)
    p = p_series(values)
    assert borel_transform(formal_laplace(p)).coeffs(32) == p.coeffs(32)


def test_gevrey_certificates():
    cert = gevrey1_certificate(factorial_series())
    assert cert.rho == pytest.approx(1, rel=1e-6) and cert.constant == pytest.approx(1, rel=1e-6)
    halved = FormalPowerSeries(lambda k: F(math.factorial(k), 2**k), plane="x")
    assert gevrey1_certificate(halved).rho == pytest.approx(2, rel=1e-6)
    # ln Gamma tail: c_(2n-2) = B_2n / (2n(2n-1)); Bernoulli growth gives radius 2 pi
    stirling = FormalPowerSeries(lambda k: lngamma_coefficient(k + 1), plane="x")
    cert = gevrey1_certificate(stirling, 40)
    assert cert.rho == pytest.approx(2 * math.pi, rel=0.15)
    assert stirling.coeff(0) == F(1, 12)
    with pytest.raises(NotGevrey1Error):
        gevrey1_certificate(FormalPowerSeries(lambda k: F(math.factorial(2 * k)), plane="x"))
    with pytest.raises(ValueError):
        gevrey1_certificate(factorial_series(), 3)


def test_pade_examples():
    geo = pade_continue(GEOMETRIC, 3)
    assert geo.numerator == (1,) and geo.denominator == (1, -1)
    assert len(geo.poles) == 1 and geo.poles[0].location == pytest.approx(1)
    assert geo.real_poles()
    alt = pade_continue(ALTERNATING, 3)
    assert alt.denominator == (1, 1) and alt.poles[0].location == pytest.approx(-1)
    assert not alt.real_poles()
    poly = pade_continue(p_series([1, 2, 3]), 3)
    assert poly.numerator == (1, 2, 3) and poly.poles == ()


def test_pade_needs_p_plane():
    with pytest.raises(DomainError):
        pade_continue(factorial_series(), 2)


@given(st.lists(st.integers(-9, 9), min_size=9, max_size=9))
def test_pade_reproduces_coefficients(values):
    series = p_series([F(v) for v in values] + [F(0)] * 4)
    try:
        model = pade_continue(series, 4)
    except PadeRankError:
        assume(False)
    assert model.taylor(9) == [F(v) for v in values]


def test_laplace_examples():
    model = pade_continue(ALTERNATING, 2)
    got = laplace_quadrature(model, 10)
    assert got.mid == pytest.approx(e_x_e1(10), rel=1e-10)
    assert got.rad < 1e-8
    one = ContinuationModel((F(1),), (F(1),))
    assert laplace_quadrature(one, 4).mid == pytest.approx(0.25, rel=1e-12)
    ramp = ContinuationModel((F(0), F(1)), (F(1),))
    assert laplace_quadrature(ramp, 4).mid == pytest.approx(1 / 16, rel=1e-12)
    with pytest.raises(PoleOnPathError):
        laplace_quadrature(pade_continue(GEOMETRIC, 2), 10)


def test_pv_examples():
    model = pade_continue(GEOMETRIC, 2)
    with mpmath.workdps(30):
        expected = float(mpmath.exp(-10) * mpmath.ei(10))
    assert pv_laplace(model, 10).mid == pytest.approx(expected, rel=1e-9)
    smooth = pade_continue(ALTERNATING, 2)
    assert pv_laplace(smooth, 7).mid == pytest.approx(laplace_quadrature(smooth, 7).mid, rel=1e-13)


def test_pv_satisfies_ei_relation():
    # f(x) = e^-x Ei(x) solves f' = -f + 1/x
    model = pade_continue(GEOMETRIC, 2)
    h = 1e-3
    f = lambda x: pv_laplace(model, x).mid
    slope = (f(10 + h) - f(10 - h)) / (2 * h)
    assert slope == pytest.approx(-f(10) + 0.1, abs=1e-6)


def test_monotone_e1_scaled():
    model = pade_continue(ALTERNATING, 2)
    xs = np.linspace(1, 30, 30)
    values = [laplace_quadrature(model, x).mid * math.exp(-x) for x in xs]
    assert all(a > b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("x", [5, 10, 20])
def test_borel_sum_of_alternating_factorials(x):
    got = borel_sum(factorial_series(alternating=True), x)
    assert got.mid == pytest.approx(e_x_e1(x), rel=1e-8)


def test_least_term_examples():
    series = factorial_series()
    total, last = least_term_sum(series, 1, F(3, 2))
    assert last == 1 and total == F(2, 3) + F(4, 9)
    with pytest.raises(DomainError):
        least_term_sum(series, 1, 1)
    for x in (20, 100):
        total, last = least_term_sum(series, 1, F(x))
        assert last == x
        with mpmath.workdps(80):
            pv = mpmath.exp(-x) * mpmath.ei(x)
            gap = abs(pv - mpmath.mpf(total.numerator) / total.denominator)
            assert gap < 3.6 * mpmath.sqrt(x) ** -1 * mpmath.exp(-x)


def test_least_term_error_decays_like_exp():
    series = factorial_series()
    xs = list(range(5, 41))
    logs = []
    with mpmath.workdps(60):
        for x in xs:
            total, _ = least_term_sum(series, 1, F(x))
            gap = abs(mpmath.exp(-x) * mpmath.ei(x) - mpmath.mpf(total.numerator) / total.denominator)
            logs.append(float(mpmath.log(gap)))
    slope = np.polyfit(xs, logs, 1)[0]
    assert slope == pytest.approx(-1, rel=0.1)


def test_least_term_constant_for_finite_series():
    poly = FormalPowerSeries([F(1), F(-2), F(3)], plane="x")
    oracle = lambda x: 1 / x - 2 / x**2 + 3 / x**3
    assert least_term_error_constant(oracle, poly, 0, 1, [3, 4, 5, 6]) < 1e-40


def test_borel_plane_examples():
    one = p_series([1])
    assert borel_plane_integrate(one, 1, 1).coeffs(4) == [-1, 0, 0, 0]
    with pytest.raises(DomainError):
        borel_plane_integrate(one, 0, 1)
    # b = 0: G = -Y/(a+p), expanded independently as a power series quotient
    rng = random.Random(4)
    y = [F(rng.randint(-5, 5)) for _ in range(6)]
    a = F(3, 2)
    inv = [F((-1) ** k) / a ** (k + 1) for k in range(12)]
    expected = [-sum(y[j] * inv[k - j] for j in range(min(k, 5) + 1)) for k in range(12)]
    assert borel_plane_integrate(p_series(y), a, 0).coeffs(12) == expected


@given(
    st.lists(st.fractions(max_denominator=6, min_value=-5, max_value=5), min_size=1, max_size=6),
    st.fractions(min_value=F(1, 4), max_value=4, max_denominator=4),
    st.fractions(min_value=-2, max_value=2, max_denominator=3),
)
def test_borel_plane_relation(ys, a, b):
    Y = p_series(ys)
    G = borel_plane_integrate(Y, a, b)
    g = G.coeffs(18)
    y = Y.coeffs(18)
    for k in range(16):
        # coefficient of p^k in (a+p)G' - (b-1)G + Y'
        lhs = a * (k + 1) * g[k + 1] + k * g[k] - (b - 1) * g[k] + (k + 1) * y[k + 1]
        assert lhs == 0


@given(
    st.lists(st.integers(-4, 4), min_size=1, max_size=4),
    st.sampled_from([F(1), F(2), F(1, 2)]),
    st.integers(0, 2),
)
def test_borel_plane_matches_transseries_antiderivative(ys, a, b):
    assume(any(ys))
    Y = p_series([F(v) for v in ys])
    G = borel_plane_integrate(Y, a, b)
    n = 10
    # x^b e^-ax y(x) with y = Laplace image of Y
    f = ts_from_terms({TMono(a, b - k - 1): math.factorial(k) * F(v) for k, v in enumerate(ys) if v})
    anti = ts_integrate(f).truncate(TMono(a, b - n))
    expected = {TMono(a, b - k - 1): math.factorial(k) * c for k, c in enumerate(G.coeffs(n)) if c}
    assert anti == expected
