"""Termwise checks of the integral-operator properties (a)-(g) on one pair (f, g).

Transseries identities are compared above ``SERIES_BOUND`` (the e^0 and e^-x
levels down to x^-8).  Definite integrals at infinite endpoints are compared
above ``STREAM_BOUND`` = omega^-8.
"""

from __future__ import annotations

import random
from fractions import Fraction

from conway_analysis.scalar import to_mpf
from conway_analysis.surreal import OMEGA, TermStream, mono_of, nf_const
from conway_analysis.transseries import (
    TMono,
    Transseries,
    ts_compose_affine,
    ts_definite_integral,
    ts_diff,
    ts_from_terms,
    ts_integrate,
    ts_mul,
)

SERIES_BOUND = TMono(1, -8, 0)
STREAM_BOUND = mono_of(-8)
A1, A2, A3 = OMEGA, OMEGA + 1, OMEGA + 3


def same_series(a: Transseries, b: Transseries) -> bool:
    return (a - b).truncate(SERIES_BOUND) == {}


def _stream(v) -> TermStream:
    return v if isinstance(v, TermStream) else TermStream.from_nf(nf_const(v))


def same_stream(a, b) -> bool:
    return (_stream(a) - _stream(b)).truncate(STREAM_BOUND) == {}


def _has_log_source(f: Transseries) -> bool:
    return any(m.weight == 0 and m.power == -1 for m in f.finite_terms())


def _finite_antiderivative_part(f: Transseries) -> Transseries:
    keep = {
        m: abs(c)
        for m, c in f.finite_terms().items()
        if m.weight == 0 or (m.power.denominator == 1 and m.power >= 0)
    }
    return ts_from_terms(keep)


def check_pair(f: Transseries, g: Transseries, rng: random.Random) -> dict[str, bool]:
    A = ts_integrate
    out: dict[str, bool] = {}
    fp, gp = ts_diff(f), ts_diff(g)

    out["a"] = same_series(ts_diff(A(f)), f)

    alpha, beta = Fraction(rng.randint(-3, 3)), Fraction(rng.randint(1, 4), rng.randint(1, 3))
    combo = f.scale(alpha) + g.scale(beta)
    out["b"] = same_series(A(combo), A(f).scale(alpha) + A(g).scale(beta)) and same_stream(
        ts_definite_integral(combo, A1, A2),
        _stream(ts_definite_integral(f, A1, A2)).scale(alpha) + _stream(ts_definite_integral(g, A1, A2)).scale(beta),
    )

    # f has no constant term, so the antiderivative of f' is f itself
    from conway_analysis.transseries import ts_eval_at

    out["c"] = same_series(A(fp), f) and same_stream(
        ts_definite_integral(fp, A1, A3), ts_eval_at(f, A3) - ts_eval_at(f, A1)
    )

    left = _stream(ts_definite_integral(f, A1, A2)) + _stream(ts_definite_integral(f, A2, A3))
    out["d"] = same_stream(left, ts_definite_integral(f, A1, A3))

    out["e"] = same_series(A(ts_mul(fp, g)) + A(ts_mul(f, gp)), ts_mul(f, g))

    scale = Fraction(1) if _has_log_source(f) else rng.choice([Fraction(1), Fraction(2), Fraction(1, 2)])
    shift = Fraction(rng.randint(0, 2))
    # substitution keeps exponential levels apart, so each level is checked on its own
    ok = True
    for weight in sorted({m.weight for m in f.finite_terms()}):
        part = ts_from_terms({m: c for m, c in f.finite_terms().items() if m.weight == weight})
        pulled = ts_compose_affine(part, scale, shift).scale(scale)
        diff = A(pulled) - ts_compose_affine(A(part), scale, shift)
        ok = ok and diff.truncate(TMono(weight * scale, -8, 0)) == {}
    out["f"] = ok

    pos = _finite_antiderivative_part(f)
    ok = True
    for lo, hi in ((1, 2), (2, 5), (Fraction(3, 2), 7)):
        ok = ok and to_mpf(ts_definite_integral(pos, lo, hi)) >= 0
    lead = _stream(ts_definite_integral(pos, A1, A3)).leading_term()
    ok = ok and (lead is None or lead[1] > 0)
    out["g"] = ok
    return out
