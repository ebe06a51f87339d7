import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from conway_analysis.errors import DomainError, NeedsMoreTerms, UnsupportedFragmentError
from conway_analysis.genetic import genetic_ei
from conway_analysis.scalar import E
from conway_analysis.surreal import OMEGA, exp_nf, mono_of, omega_pow
from conway_analysis.transseries import (
    LOG_X,
    T_ONE,
    X_INV,
    GeneratorSet,
    TMono,
    ei_transseries,
    ts_cmp,
    ts_compose_affine,
    ts_constant,
    ts_converges,
    ts_definite_integral,
    ts_diff,
    ts_eval_at,
    ts_from_terms,
    ts_grid,
    ts_integrate,
    ts_inverse,
    ts_mul,
    ts_to_json,
)

from helpers import random_integral_pair, random_transseries
from integral_checks import check_pair, same_series

W = OMEGA
EX = TMono(1, 0, 0)  # e^-x
ONE = ts_constant(1)


def ts(d):
    return ts_from_terms(d)


def w(p):
    return omega_pow(F(p))


def test_add_examples():
    t = ts({X_INV: 3, EX: -1})
    assert (t + ts({})).finite_terms() == t.finite_terms()
    assert (t - t).finite_terms() == {}
    two = ts({EX: 1}) + ts({X_INV: 1})
    assert [m for m, _ in two.take(3)[0]] == [X_INV, EX]


def test_mul_examples():
    assert ts_mul(ts({EX: 1}), ts({EX: 1})).finite_terms() == {TMono(2, 0, 0): 1}
    assert ts_mul(ts({T_ONE: 1, X_INV: 1}), ts({T_ONE: 1, X_INV: -1})).finite_terms() == {T_ONE: 1, TMono(0, -2): -1}
    assert ts_mul(ts({TMono(1, -1): 1}), ts({TMono(2, -2): 1})).finite_terms() == {TMono(3, -3): 1}


def test_inverse_examples():
    assert ts_inverse(ts({EX: 1})).take(2)[0] == [(TMono(-1, 0, 0), 1)]
    geo = ts_inverse(ts({T_ONE: 1, EX: 1}))
    assert geo.take(5)[0] == [(TMono(j, 0, 0), F((-1) ** j)) for j in range(5)]
    # 1/(y + C e^-x) = y^-1 sum (-C/y)^j e^(-jx) with y = x^-1
    c = F(3)
    shaped = ts_inverse(ts({X_INV: 1, EX: c}))
    assert shaped.take(4)[0] == [(TMono(j, j + 1, 0), (-c) ** j) for j in range(4)]
    with pytest.raises(ZeroDivisionError):
        ts_inverse(ts({}))


def test_diff_examples():
    assert ts_diff(ts({EX: 1})).finite_terms() == {EX: -1}
    assert ts_diff(ts({X_INV: 1})).finite_terms() == {TMono(0, -2): -1}
    assert ts_diff(ts({TMono(2, 1): 1})).finite_terms() == {TMono(2, 0): 1, TMono(2, 1): -2}


def test_integrate_examples():
    assert ts_integrate(ts({EX: 1})).finite_terms() == {EX: -1}
    assert ts_integrate(ts({X_INV: 1})).finite_terms() == {LOG_X: 1}
    value = ts_definite_integral(ts({TMono(-1, 0, 0): 1}), 0, W)
    e_w = exp_nf(W).atom
    assert value.take(5)[0] == [(e_w, 1), (mono_of(0), -1)]


def test_integrate_rejects_logs_in_decaying_terms():
    with pytest.raises(UnsupportedFragmentError):
        ts_integrate(ts({TMono(1, 0, 1): 1})).truncate(TMono(1, -3))


def test_cmp_examples():
    assert ts_cmp(ts({EX: 1}), ts({TMono(0, -100): 1})) == -1
    assert ts_cmp(ts({X_INV: 1}), ts({TMono(0, -2): 1})) == 1
    assert ts_cmp(ts({LOG_X: 1}), ts({TMono(0, F(1, 2)): 1})) == -1


def test_converges_examples():
    bound = TMono(6, 0, 0)
    const = ts_converges([ts({X_INV: 2})] * 5, bound)
    assert const.finite_terms() == {X_INV: 2}

    def partials():
        acc = {}
        for j in range(12):
            acc[TMono(j, 0, 0)] = 1
            yield ts(dict(acc))

    limit = ts_converges(partials(), bound)
    assert limit.finite_terms() == {TMono(j, 0, 0): 1 for j in range(7)}
    drift = ts_converges((ts({X_INV: F(1, m)}) for m in range(1, 30)), bound)
    assert isinstance(drift, NeedsMoreTerms)


def test_eval_examples():
    assert ts_eval_at(ts({EX: 1}), W).take(2)[0] == [(exp_nf(-W).atom, 1)]
    got = ts_eval_at(ts({X_INV: 1}), W + 1).take(3)[0]
    assert got == [(mono_of(-1), 1), (mono_of(-2), -1), (mono_of(-3), 1)]
    with pytest.raises(DomainError):
        ts_eval_at(ts({X_INV: 1}), w(0) * 5)


def test_ei_transseries_matches_genetic_at_omega():
    lhs = ts_eval_at(ei_transseries(), W)
    assert lhs.take(10)[0] == genetic_ei(W).take(10)[0]


def test_generator_validation():
    with pytest.raises(DomainError):
        GeneratorSet((F(-1),), (F(1),))
    with pytest.raises(DomainError):
        GeneratorSet((F(1),), (F(3, 2),))


def test_grid_enumeration_is_decreasing():
    gens = GeneratorSet((F(1), F(3, 2)), (F(1), F(1, 2)))
    series = ts_grid(lambda k, l: 1 + k[0] + 2 * k[1] + l, gens)
    terms, _ = series.take(25)
    monos = [m for m, _ in terms]
    assert all(a > b for a, b in zip(monos, monos[1:]))


def test_json_dump_is_keyed_by_grid_index():
    dump = ts_to_json(ei_transseries(), terms=3)
    assert [t["k"] for t in dump["terms"]] == [[-1]] * 3
    assert [t["l"] for t in dump["terms"]] == [0, 1, 2]
    assert [t["coeff"] for t in dump["terms"]] == ["1", "1", "2"]
    assert dump["truncated"]


def test_affine_composition_keeps_decaying_terms():
    f = ts({X_INV: 1, TMono(0, -3): 2, LOG_X: 1})
    assert ts_compose_affine(f, 1, 0).finite_terms() == f.finite_terms()
    shifted = ts_compose_affine(ts({LOG_X: 1}), 1, 1).truncate(TMono(0, -3))
    assert shifted == {LOG_X: 1, X_INV: 1, TMono(0, -2): F(-1, 2), TMono(0, -3): F(1, 3)}
    scaled = ts_compose_affine(ts({TMono(1, -2): 1}), 2, 0).finite_terms()
    assert scaled == {TMono(2, -2): F(1, 4)}


# --------------------------------------------------------------------------
# properties

SEEDS = st.integers(0, 2**32 - 1)


@given(SEEDS, SEEDS)
def test_leibniz_rule(s1, s2):
    a = random_transseries(random.Random(s1))
    b = random_transseries(random.Random(s2))
    lhs = ts_diff(ts_mul(a, b))
    rhs = ts_mul(ts_diff(a), b) + ts_mul(a, ts_diff(b))
    assert (lhs - rhs).finite_terms() == {}


@given(SEEDS)
def test_fundamental_theorem(seed):
    f, _ = random_integral_pair(random.Random(seed))
    assert same_series(ts_diff(ts_integrate(f)), f)


@given(SEEDS, st.integers(1, 6))
def test_inverse_residual_below_level(seed, order):
    a = random_transseries(random.Random(seed))
    terms = a.take(2)[0]
    if len(terms) < 2:
        return
    (m0, _), (m1, _) = terms
    step = m1 / m0
    residual = ts_mul(a, ts_inverse(a, order)) - ONE
    left = residual.finite_terms()
    assert all(not m > step ** (order + 1) for m in left)


@given(SEEDS, SEEDS)
def test_eval_is_multiplicative(s1, s2):
    a = random_transseries(random.Random(s1), 3)
    b = random_transseries(random.Random(s2), 3)
    x0 = W + 1
    bound = mono_of(-8)
    lhs = ts_eval_at(ts_mul(a, b), x0)
    rhs = ts_eval_at(a, x0) * ts_eval_at(b, x0)
    assert (lhs - rhs).truncate(bound) == {}


@given(SEEDS)
def test_integral_properties(seed):
    rng = random.Random(seed)
    f, g = random_integral_pair(rng)
    assert all(check_pair(f, g, rng).values())


def test_real_endpoint_integral_is_exact():
    # int_1^2 x^-2 dx = 1/2
    assert ts_definite_integral(ts({TMono(0, -2): 1}), 1, 2) == F(1, 2)
    value = ts_definite_integral(ts({EX: 1}), 0, 1)
    assert value == 1 - 1 / E
