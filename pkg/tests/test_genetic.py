import random
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, strategies as st

from conway_analysis.borel import least_term_sum
from conway_analysis.errors import DomainError, NeedsMoreTerms, UnsupportedFragmentError
from conway_analysis.genetic import (
    NEG_INF,
    POS_INF,
    EiInterval,
    GeneticBracket,
    birthday,
    classify_taylor_option,
    genetic_borel_extension,
    genetic_ei,
    genetic_ei1,
    resolve_bracket,
    resolve_truncation_bracket,
    sign_expansion,
    simplest_dyadic_between,
)
from conway_analysis.scalar import EI1, to_mpf
from conway_analysis.special import ei_asymptotic
from conway_analysis.surreal import OMEGA, TermStream, exp_nf, nf_const, omega_pow, as_stream
from conway_analysis.borel import FormalPowerSeries

from helpers import all_sign_expansions, brute_force_simplest, dyadic_from_signs

W = OMEGA
TABLE = all_sign_expansions(12)


def w(p):
    return omega_pow(F(p))


def test_simplest_examples():
    assert simplest_dyadic_between() == 0
    assert simplest_dyadic_between([0], [1]) == F(1, 2)
    assert simplest_dyadic_between([3], []) == 4
    assert simplest_dyadic_between([NEG_INF], [POS_INF]) == 0
    assert simplest_dyadic_between([F(-5, 2)], [F(-9, 4)]) == F(-19, 8)


def test_simplest_rejects_disordered():
    with pytest.raises(DomainError):
        simplest_dyadic_between([1], [1])


def test_birthday_examples():
    assert birthday(0) == 0
    assert birthday(F(1, 2)) == 2
    assert birthday(-3) == 3
    with pytest.raises(UnsupportedFragmentError):
        birthday(F(1, 3))


def test_sign_expansion_matches_enumeration():
    for value, born in TABLE.items():
        signs = sign_expansion(value)
        assert len(signs) == born == birthday(value)
        assert dyadic_from_signs(tuple(signs)) == value


dyadics = st.sampled_from(sorted(v for v, b in TABLE.items() if b <= 8))


@given(dyadics, dyadics)
def test_simplest_is_simplest(a, b):
    lo, hi = min(a, b), max(a, b)
    if lo == hi:
        return
    z = simplest_dyadic_between([lo], [hi])
    assert lo < z < hi
    assert z == brute_force_simplest(lo, hi, TABLE)


@given(dyadics)
def test_one_sided_brackets(a):
    assert simplest_dyadic_between([a], []) == brute_force_simplest(a, None, TABLE)
    assert simplest_dyadic_between([], [a]) == brute_force_simplest(None, a, TABLE)


def test_truncation_examples():
    assert resolve_truncation_bracket(W, nf_const(1)) == W
    x = w(2) + W
    assert resolve_truncation_bracket(x, w(F(1, 2))) == x
    with pytest.raises(DomainError):
        resolve_truncation_bracket(W + 1, nf_const(1))


def test_truncation_needs_more_terms_without_certificate():
    # a stream with no certificate whose prefix is fine
    base = as_stream(w(-1)).compose(lambda k: 1)
    opaque = TermStream(lambda b: base.truncate(b), base.candidates)
    got = resolve_truncation_bracket(opaque, w(-50), depth=8)
    assert isinstance(got, NeedsMoreTerms) and not got


def test_truncation_independent_of_radius():
    x = genetic_ei(W)
    rng = random.Random(1)
    for _ in range(5):
        radius = exp_nf(-W).stream().scale(F(rng.randint(1, 9)))
        got = resolve_truncation_bracket(x, radius)
        assert got is x


@given(st.integers(1, 6), st.integers(-3, 3), st.integers(1, 9), st.integers(1, 4))
def test_truncation_law_on_finite_forms(n_terms, top, coeff, gap):
    x = sum((w(top - j) * F(coeff + j) for j in range(n_terms)), nf_const(0))
    y = w(top - n_terms + 1 - gap) * F(coeff)
    assert resolve_bracket(GeneticBracket([x - y], [x + y])) == x


def test_bracket_resolution_with_infinite_options():
    assert resolve_bracket(GeneticBracket([3], [W])) == 4
    assert resolve_bracket(GeneticBracket([-W], [F(-5, 2)])) == -3
    assert resolve_bracket(GeneticBracket([W - 1], [W + 1])) == W
    with pytest.raises(DomainError):
        GeneticBracket([2], [1])


def test_ei_at_omega():
    value = genetic_ei(W)
    terms, _ = value.take(12)
    e_w = exp_nf(W).atom
    expected = []
    fact = 1
    for k in range(12):
        expected.append((e_w * w(-k - 1).terms[0][0], F(fact)))
        fact *= k + 1
    assert terms == expected


def test_ei_at_ten_contains_true_value():
    interval = genetic_ei(10)
    assert isinstance(interval, EiInterval)
    total, _ = least_term_sum(ei_asymptotic(), 1, F(10))
    assert interval.least_term == total
    assert interval.contains(mpmath.ei(10))
    assert float(interval.upper() - interval.lower()) == pytest.approx(2 * 3.55 / 10**0.5)


def test_ei_domain():
    with pytest.raises(DomainError):
        genetic_ei(1)
    with pytest.raises(UnsupportedFragmentError):
        genetic_ei(nf_const(2) + w(-1))


def test_ei1_subtracts_registry_constant():
    a = genetic_ei(W)
    b = genetic_ei1(W)
    # the constant shift hides below the infinite e^w part, so only prefixes are visible
    assert a.take(6)[0] == b.take(6)[0]
    interval = genetic_ei1(5)
    assert float(to_mpf(interval.midpoint)) == pytest.approx(float(to_mpf(genetic_ei(5).midpoint) - to_mpf(EI1)))


def test_taylor_route_matches_direct_series():
    # Ei(w + w^-1) computed through Taylor options equals e^(w + 1/w) sum k!/(w + 1/w)^(k+1)
    x = W + w(-1)
    via_taylor = genetic_ei(x)
    from conway_analysis.surreal import eval_series_at_infinitesimal, nf_inverse

    inv = nf_inverse(x)
    direct = exp_nf(x).stream() * eval_series_at_infinitesimal(lambda n: 0 if n == 0 else F(1) * _fact(n - 1), inv)
    assert via_taylor.take(8)[0] == direct.take(8)[0]


def _fact(n):
    out = 1
    for k in range(2, n + 1):
        out *= k
    return out


def test_taylor_option_classification():
    # f = x^3 at 0: first nonzero derivative above degree 1 is the third
    derivs = {0: 0, 1: 0, 2: 0, 3: 6}
    opt = classify_taylor_option(lambda j: derivs.get(j, 0), 1, F(-1, 10))
    assert opt.order == 3 and opt.side == "R"
    opt = classify_taylor_option(lambda j: derivs.get(j, 0), 1, F(1, 10))
    assert opt.side == "L"
    flat = classify_taylor_option(lambda j: 0, 2, 1, n_cap=5)
    assert isinstance(flat, NeedsMoreTerms)


def test_borel_extension_real_and_infinite():
    series = FormalPowerSeries(lambda k: F(_fact(k)), plane="x")
    total, radius = genetic_borel_extension(series, 10, 4)
    assert total == least_term_sum(series, 1, F(10))[0]
    assert abs(mpmath.exp(-10) * mpmath.ei(10) - to_mpf(total)) < radius
    at_w = genetic_borel_extension(series, W, 4)
    assert at_w.take(3)[0] == [(w(-1).terms[0][0], 1), (w(-2).terms[0][0], 1), (w(-3).terms[0][0], 2)]
