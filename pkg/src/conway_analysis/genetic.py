"""{L | R} brackets on the representable fragment, and the bracket definition of Ei.

Finite brackets of dyadics are resolved by the simplicity rule.  Brackets of
the form {x - y | x + y} with x's monomials all beyond y's resolve to x; this
is what turns the least-term bracket for Ei at an infinite point into the full
asymptotic series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

import mpmath

from .borel import FormalPowerSeries, least_term_sum
from .errors import DomainError, NeedsMoreTerms, UnsupportedFragmentError
from .hahn import Terms, add_terms, merge_family
from .scalar import EI1, Ball, Scalar, as_scalar, scalar_exp, sign, to_mpf
from .surreal import (
    LOG_OMEGA,
    ONE_MONO,
    Mono,
    SurrealNF,
    TermStream,
    as_stream,
    decompose,
    eval_series_at_infinitesimal,
    exp_nf,
    nf_add,
    nf_const,
    nf_inverse,
    nf_scale,
    rational_value,
)

#: Default constant for the Ei bracket; the sup it bounds approaches 3.5414 as x -> 1+.
DEFAULT_EI_CONSTANT = Fraction(355, 100)


class _Marker:
    __slots__ = ("name", "side")

    def __init__(self, name: str, side: int) -> None:
        self.name = name
        self.side = side

    def __repr__(self) -> str:
        return self.name


NEG_INF = _Marker("-inf", -1)
POS_INF = _Marker("+inf", 1)


# --------------------------------------------------------------------------
# dyadics


def _as_rational(value: object) -> Fraction:
    if isinstance(value, SurrealNF):
        real = value.real_value()
        if real is None or not isinstance(real, Fraction):
            raise UnsupportedFragmentError("option is not a rational number")
        return real
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    raise UnsupportedFragmentError(f"cannot use {value!r} as a dyadic option")


def _is_dyadic(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


def _extreme(options: Iterable[object], side: int) -> Fraction | None:
    values = [_as_rational(v) for v in options if not isinstance(v, _Marker)]
    if not values:
        return None
    return max(values) if side < 0 else min(values)


def _simplest_above(lo: Fraction | None, hi: Fraction | None) -> Fraction:
    """Simplest number in (lo, hi) when the interval lies in [0, inf)."""
    start = math.floor(lo) + 1 if lo is not None else 0
    if hi is None or start < hi:
        return Fraction(start)
    k = 1
    while True:
        m = math.floor(lo * 2**k) + 1
        candidate = Fraction(m, 2**k)
        if candidate < hi:
            return candidate
        k += 1


def simplest_dyadic_between(left: Iterable[object] = (), right: Iterable[object] = ()) -> Fraction:
    """The number of least birthday strictly between every left and every right option."""
    lo = _extreme(left, -1)
    hi = _extreme(right, 1)
    if lo is not None and hi is not None and not lo < hi:
        raise DomainError(f"bracket options are not ordered: {lo} is not below {hi}")
    if (lo is None or lo < 0) and (hi is None or hi > 0):
        return Fraction(0)
    if lo is not None and lo >= 0:
        return _simplest_above(lo, hi)
    # the interval lies in (-inf, 0]
    return -_simplest_above(-hi if hi is not None else None, -lo if lo is not None else None)


def birthday(x: object) -> int:
    """Length of the sign expansion of a dyadic rational."""
    q = _as_rational(x)
    if not _is_dyadic(q):
        raise UnsupportedFragmentError(f"{q} is not dyadic; its birthday is infinite")
    n = math.floor(abs(q))
    k = q.denominator.bit_length() - 1
    return n if k == 0 else n + 1 + k


def sign_expansion(x: object) -> list[int]:
    """Sign expansion of a dyadic as a list of +1 / -1."""
    q = _as_rational(x)
    if not _is_dyadic(q):
        raise UnsupportedFragmentError(f"{q} is not dyadic")
    s = 1 if q >= 0 else -1
    a = abs(q)
    n = math.floor(a)
    frac = a - n
    if frac == 0:
        return [s] * n
    k = frac.denominator.bit_length() - 1
    bits = [(frac.numerator >> (k - 1 - i)) & 1 for i in range(k)]
    signs = [1] * (n + 1) + [-1] + [1 if b else -1 for b in bits[:-1]]
    return [s * v for v in signs]


# --------------------------------------------------------------------------
# brackets


@dataclass(frozen=True)
class GeneticBracket:
    left: tuple = ()
    right: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "left", tuple(self.left))
        object.__setattr__(self, "right", tuple(self.right))
        for a in self.left:
            for b in self.right:
                if isinstance(a, _Marker) or isinstance(b, _Marker):
                    if (isinstance(a, _Marker) and a.side > 0) or (isinstance(b, _Marker) and b.side < 0):
                        raise DomainError("infinite markers are on the wrong side")
                    continue
                if not _less(a, b):
                    raise DomainError("every left option must be below every right option")


def _nf(value: object) -> SurrealNF:
    if isinstance(value, SurrealNF):
        return value
    return nf_const(as_scalar(value))


def _less(a: object, b: object) -> bool:
    return _nf(a) < _nf(b)


def resolve_bracket(bracket: GeneticBracket) -> SurrealNF | Fraction:
    """Value of a finite bracket on the supported fragment."""
    real_left = [v for v in bracket.left if isinstance(v, _Marker) or _nf(v).is_real()]
    real_right = [v for v in bracket.right if isinstance(v, _Marker) or _nf(v).is_real()]
    if len(real_left) == len(bracket.left) and len(real_right) == len(bracket.right):
        return simplest_dyadic_between(bracket.left, bracket.right)
    left = [_nf(v) for v in bracket.left if not isinstance(v, _Marker)]
    right = [_nf(v) for v in bracket.right if not isinstance(v, _Marker)]
    lo = max(left) if left else None
    hi = min(right) if right else None
    zero = nf_const(0)
    if (lo is None or lo < zero) and (hi is None or hi > zero):
        return Fraction(0)
    if lo is not None and hi is not None:
        mid = nf_scale(lo + hi, Fraction(1, 2))
        half = nf_scale(hi - lo, Fraction(1, 2))
        try:
            got = resolve_truncation_bracket(mid, half)
        except DomainError:
            got = None
        if isinstance(got, (SurrealNF, TermStream)):
            return got if isinstance(got, SurrealNF) else got.to_nf()
    # one side is infinite and the other is a real: the nearest integers are simplest
    if lo is not None and lo.is_real() and (hi is None or (hi.terms and hi.terms[0][0] > ONE_MONO and sign(hi.terms[0][1]) > 0)):
        return simplest_dyadic_between([lo.real_value()], [])
    if hi is not None and hi.is_real() and (lo is None or (lo.terms and lo.terms[0][0] > ONE_MONO and sign(lo.terms[0][1]) < 0)):
        return simplest_dyadic_between([], [hi.real_value()])
    raise UnsupportedFragmentError("bracket lies outside the supported fragment")


# --------------------------------------------------------------------------
# the truncation rule


def _log_of_mono(m: Mono) -> SurrealNF:
    """ln of a monomial e^E w^p for rational p: E + p ln(w)."""
    p = rational_value(m.power)
    if p is None:
        raise UnsupportedFragmentError("logarithm of a monomial with a non-rational power of w")
    out = m.expo
    if p:
        out = nf_add(out, nf_scale(LOG_OMEGA, p))
    return out


def _below_every_power(m: Mono, seed: Mono, gen: Mono) -> bool:
    """True when m < seed * gen**n for every n (archimedean separation of logarithms)."""
    ratio = m / seed
    if not ratio < ONE_MONO:
        return False
    log_ratio = _log_of_mono(ratio)
    log_gen = _log_of_mono(gen)
    if not log_ratio.terms:
        return False
    if not log_gen.terms:
        return True
    return log_ratio.terms[0][0] > log_gen.terms[0][0]


def _stream_terms_above(x: TermStream, bound: Mono, depth: int) -> tuple[list, bool]:
    terms, tail = x.take(depth)
    return terms, tail is None


def resolve_truncation_bracket(
    x: SurrealNF | TermStream, y: SurrealNF | TermStream, depth: int = 32
) -> SurrealNF | TermStream | NeedsMoreTerms:
    """Return x, certifying {x - y | x + y} = x when x's monomials all exceed y's.

    Finite x is checked directly.  Infinite streams need a grid certificate
    whose generators cannot reach y's leading monomial; without one the first
    ``depth`` terms are inspected and the outcome is NeedsMoreTerms.
    """
    y_stream = as_stream(y)
    lead_y = y_stream.leading_term()
    if lead_y is None or sign(lead_y[1]) <= 0:
        raise DomainError("the bracket radius must be positive")
    top_y = lead_y[0]
    if isinstance(x, SurrealNF):
        if x.terms and not x.terms[-1][0] > top_y:
            raise DomainError("exponent separation fails: x has a monomial at or below y's")
        return x
    if x.is_finite:
        terms = x.finite_terms()
        if terms and not min(terms) > top_y:
            raise DomainError("exponent separation fails: x has a monomial at or below y's")
        return x
    cert = x.certificate
    if cert is not None and cert.seeds:
        ok = True
        for seed in cert.seeds:
            if not seed > top_y:
                ok = False
                break
            if cert.gens and not all(_below_every_power(top_y, seed, g) for g in cert.gens):
                ok = False
                break
        if ok:
            return x
    terms, complete = _stream_terms_above(x, top_y, depth)
    for m, _ in terms:
        if not m > top_y:
            raise DomainError("exponent separation fails: x has a monomial at or below y's")
    if complete:
        return x
    return NeedsMoreTerms("exponent separation could not be certified from the inspected prefix", len(terms))


# --------------------------------------------------------------------------
# Taylor options


@dataclass(frozen=True)
class TaylorOption:
    base: object
    degree: int
    side: str  # "L" or "R"
    order: int  # the first index past the degree with a nonzero derivative


def classify_taylor_option(
    derivative: Callable[[int], object], degree: int, displacement: object, n_cap: int = 16
) -> TaylorOption | NeedsMoreTerms:
    """Place the degree-n Taylor polynomial on the left or right.

    The side is the sign of f^(N)(base) * displacement^N, where N is the first
    index above ``degree`` with a nonzero derivative.
    """
    disp_sign = _sign_of(displacement)
    if disp_sign == 0:
        raise DomainError("displacement must be nonzero")
    for order in range(degree + 1, degree + 1 + n_cap):
        s = _sign_of(derivative(order))
        if s:
            total = s * (disp_sign**order)
            return TaylorOption(None, degree, "L" if total > 0 else "R", order)
    return NeedsMoreTerms("all sampled derivatives vanish", n_cap)


def _sign_of(value: object) -> int:
    if isinstance(value, (SurrealNF, TermStream)):
        return as_stream(value).sign()
    return sign(as_scalar(value))


# --------------------------------------------------------------------------
# Ei


def _ei_factorial_series() -> Callable[[int], Fraction]:
    # F(u) = sum_k k! u^(k+1), so Ei(x) = e^x F(1/x)
    def coeff(n: int) -> Fraction:
        return Fraction(0) if n == 0 else Fraction(math.factorial(n - 1))

    return coeff


def _ei_infinite_direct(x: SurrealNF) -> TermStream:
    inv = nf_inverse(x)
    series = eval_series_at_infinitesimal(_ei_factorial_series(), inv)
    return exp_nf(x).stream() * series


def _ei_derivative(x0: SurrealNF, order: int, inv: TermStream, e_x0: TermStream) -> TermStream:
    """Ei^(order)(x0) for order >= 1: e^x0 sum_j C(order-1, j) (-1)^j j! x0^(-j-1)."""
    m = order - 1
    total: TermStream | None = None
    power = inv
    for j in range(m + 1):
        piece = power.scale(Fraction((-1) ** j * math.comb(m, j) * math.factorial(j)))
        total = piece if total is None else total + piece
        power = power * inv
    assert total is not None
    return e_x0 * total


@dataclass
class EiInterval:
    """Ei(x) lies within ``radius`` of the exact ``midpoint`` for real x > 1."""

    x: Fraction
    midpoint: Scalar
    least_term: Fraction
    last_index: int
    constant: Fraction
    shift: Scalar = Fraction(0)

    @property
    def radius(self) -> mpmath.mpf:
        return to_mpf(self.constant) / mpmath.sqrt(to_mpf(self.x))

    def lower(self) -> mpmath.mpf:
        return to_mpf(self.midpoint) - self.radius

    def upper(self) -> mpmath.mpf:
        return to_mpf(self.midpoint) + self.radius

    def contains(self, value: object) -> bool:
        v = to_mpf(as_scalar(value)) if not isinstance(value, mpmath.mpf) else value
        return self.lower() <= v <= self.upper()

    def as_ball(self) -> Ball:
        return Ball(float(to_mpf(self.midpoint)), float(self.radius))


def genetic_ei(
    x: SurrealNF | Scalar | int | float, C: Scalar | int | float = DEFAULT_EI_CONSTANT, depth: int = 32
) -> TermStream | EiInterval | NeedsMoreTerms:
    """Ei by its least-term bracket.

    Real x > 1 gives an interval around the exact least-term sum.  Infinite x
    without infinitesimal part resolves through the truncation rule to
    e^x sum k!/x^(k+1); an infinitesimal part is added through the Taylor
    expansion about the remaining point.
    """
    C = Fraction(C) if isinstance(C, (int, float)) else C
    if sign(as_scalar(C)) <= 0:
        raise DomainError("the error constant must be positive")
    if not isinstance(x, SurrealNF):
        x = nf_const(as_scalar(Fraction(x) if isinstance(x, float) else x))
    big, re, small = decompose(x)
    if not big.terms:
        if small.terms:
            raise UnsupportedFragmentError("Ei at a finite non-real point is not supported")
        if not isinstance(re, Fraction):
            raise UnsupportedFragmentError("Ei at an irrational real point needs a rational argument")
        if re <= 1:
            raise DomainError("the Ei bracket needs x > 1")
        series = FormalPowerSeries(lambda k: Fraction(math.factorial(k)), plane="x")
        total, last = least_term_sum(series, 1, re)
        return EiInterval(re, scalar_exp(re) * total, total, last, as_scalar(C))
    if sign(big.terms[0][1]) < 0:
        raise DomainError("the Ei bracket needs x > 1")
    base = nf_add(big, nf_const(re)) if re != 0 else big
    if not small.terms:
        value = _ei_infinite_direct(base)
        radius = _radius(base, C)
        return resolve_truncation_bracket(value, radius, depth)
    return _ei_taylor(base, small, C, depth)


def _radius(x: SurrealNF, C: Scalar) -> TermStream:
    # C x^(-1/2) = C * lead^(-1/2) * (1 + h)^(-1/2)
    stream = TermStream.from_nf(x)
    mono, c, rest = stream.split_leading()
    from .scalar import scalar_pow

    return rest.binomial_power(Fraction(-1, 2)).shift(mono ** Fraction(-1, 2)).scale(as_scalar(C) * scalar_pow(c, Fraction(-1, 2)))


def _ei_taylor(base: SurrealNF, eps: SurrealNF, C: Scalar, depth: int) -> TermStream | NeedsMoreTerms:
    head = _ei_infinite_direct(base)
    resolved = resolve_truncation_bracket(head, _radius(base, C), depth)
    if isinstance(resolved, NeedsMoreTerms):
        return resolved
    inv = nf_inverse(base)
    e_base = exp_nf(base).stream()
    eps_stream = as_stream(eps)
    lead_eps = eps_stream.upper_bound()
    lead_base = e_base.upper_bound() * inv.upper_bound()
    derivs: dict[int, TermStream] = {}
    powers: dict[int, TermStream] = {0: as_stream(nf_const(1))}

    def term(k: int) -> TermStream:
        if k not in derivs:
            derivs[k] = _ei_derivative(base, k, inv, e_base)
        if k not in powers:
            powers[k] = powers[k - 1] * eps_stream if k - 1 in powers else eps_stream**k
        return (derivs[k] * powers[k]).scale(Fraction(1, math.factorial(k)))

    def lead_of(k: int) -> Mono:
        return lead_base * (lead_eps**k)

    def trunc(bound: Mono) -> Terms:
        out: Terms = dict(resolved.truncate(bound))
        k = 1
        while not lead_of(k) < bound:
            out = add_terms(out, term(k).truncate(bound))
            k += 1
        return out

    def candidates():
        def heads():
            yield resolved.upper_bound(), resolved.candidates()
            k = 1
            while True:
                yield lead_of(k), term(k).candidates()
                k += 1

        return merge_family(heads())

    return TermStream(trunc, candidates)


def genetic_ei1(x, C: Scalar | int | float = DEFAULT_EI_CONSTANT, depth: int = 32):
    """Ei(1, x) = int_1^x e^t/t dt = Ei(x) - Ei(1)."""
    value = genetic_ei(x, C, depth)
    if isinstance(value, NeedsMoreTerms):
        return value
    if isinstance(value, EiInterval):
        value.midpoint = value.midpoint - EI1
        value.shift = -EI1
        return value
    return value - TermStream.from_nf(nf_const(EI1))


def genetic_borel_extension(
    series: FormalPowerSeries,
    x: SurrealNF | Scalar | int,
    C: Scalar | int,
    rho: Fraction | int = 1,
    b: Fraction | int = 0,
    depth: int = 32,
):
    """Bracket value of a Gevrey-1 series sum c_k x^(-k-1).

    Real x gives (least-term sum, radius C e^(-rho x) x^b).  Infinite x with
    no infinitesimal part gives the full series, certified by the truncation rule.
    """
    if series.plane != "x":
        raise DomainError("expected a series in 1/x")
    rho = Fraction(rho)
    b = Fraction(b)
    if not isinstance(x, SurrealNF):
        x = nf_const(as_scalar(x))
    big, re, small = decompose(x)
    if not big.terms:
        if small.terms or not isinstance(re, Fraction):
            raise UnsupportedFragmentError("finite non-rational evaluation point")
        if re <= 1:
            raise DomainError("needs x > 1")
        total, last = least_term_sum(series, rho, re)
        with mpmath.workdps(40):
            radius = to_mpf(as_scalar(C)) * mpmath.exp(-to_mpf(rho * re)) * to_mpf(re) ** to_mpf(b)
        return total, radius
    if small.terms:
        raise UnsupportedFragmentError("infinitesimal part: use the Taylor route of genetic_ei")
    inv = nf_inverse(x)
    value = eval_series_at_infinitesimal(lambda n: Fraction(0) if n == 0 else series.coeff(n - 1), inv)
    stream = TermStream.from_nf(x)
    mono, c, rest = stream.split_leading()
    radius = exp_nf(nf_scale(x, -rho)).stream() * rest.binomial_power(b).shift(mono**b).scale(as_scalar(C))
    return resolve_truncation_bracket(value, radius, depth)
