"""Level-one, log-free transseries over generators x^-1 and x^beta_j e^(-lambda_j x).

A monomial is stored canonically as ``x**power * exp(-weight*x) * ln(x)**log``.
Series are lazy grid-based sums (``Transseries``), so infinite asymptotic
expansions such as the one of Ei can be multiplied, differentiated and
integrated exactly; coefficients appear only when a truncation is asked for.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Sequence

import mpmath

from . import config
from .errors import (
    DomainError,
    NeedsMoreTerms,
    TermCapError,
    UnsupportedFragmentError,
)
from .hahn import (
    CandidateList,
    GridCertificate,
    LazySeries,
    Terms,
    add_terms,
    merge_candidates,
    merge_family,
    monoid_candidates,
    mul_terms,
    sorted_terms,
    stabilised_limit,
)
from .scalar import Ball, Scalar, as_scalar, format_scalar, scalar_exp, scalar_ln, scalar_pow, sign, to_mpf
from .surreal import (
    ONE_MONO,
    SurrealNF,
    TermStream,
    exp_nf,
    ln_nf,
    nf_const,
    nf_scale,
)


def _cmp_scalar(a: Scalar, b: Scalar) -> int:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return (a > b) - (a < b)
    return sign(as_scalar(a) - as_scalar(b))


class TMono:
    """The monomial x**power * exp(-weight*x) * ln(x)**log; bigger weight means smaller."""

    __slots__ = ("weight", "power", "log", "_hash")

    def __init__(self, weight: Scalar | int = 0, power: Fraction | int = 0, log: int = 0) -> None:
        self.weight = as_scalar(weight)
        self.power = Fraction(power)
        self.log = int(log)
        self._hash = hash((self.weight, self.power, self.log))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, TMono)
            and self.power == other.power
            and self.log == other.log
            and self.weight == other.weight
        )

    def __hash__(self) -> int:
        return self._hash

    def cmp(self, other: "TMono") -> int:
        c = _cmp_scalar(other.weight, self.weight)
        if c:
            return c
        if self.power != other.power:
            return 1 if self.power > other.power else -1
        return (self.log > other.log) - (self.log < other.log)

    def __lt__(self, other: "TMono") -> bool:
        return self.cmp(other) < 0

    def __gt__(self, other: "TMono") -> bool:
        return self.cmp(other) > 0

    def __le__(self, other: "TMono") -> bool:
        return self.cmp(other) <= 0

    def __ge__(self, other: "TMono") -> bool:
        return self.cmp(other) >= 0

    def __mul__(self, other: "TMono") -> "TMono":
        return TMono(self.weight + other.weight, self.power + other.power, self.log + other.log)

    def __truediv__(self, other: "TMono") -> "TMono":
        return TMono(self.weight - other.weight, self.power - other.power, self.log - other.log)

    def __pow__(self, n: int) -> "TMono":
        return TMono(self.weight * n, self.power * n, self.log * n)

    @property
    def is_one(self) -> bool:
        return self.weight == 0 and self.power == 0 and self.log == 0

    def __repr__(self) -> str:
        from .syntax import render_tmono

        return f"TMono({render_tmono(self)})"


T_ONE = TMono()
X_INV = TMono(0, -1, 0)
X = TMono(0, 1, 0)
LOG_X = TMono(0, 0, 1)


def _exact_real(value: object, what: str) -> Scalar:
    if isinstance(value, complex):
        raise DomainError(f"{what} must be real; complex generators are not supported")
    v = as_scalar(value)
    if isinstance(v, Ball):
        raise DomainError(f"{what} must be an exact scalar")
    return v


@dataclass(frozen=True)
class GeneratorSet:
    """Exponential generators x^beta_j e^(-lambda_j x); x^-1 is always present."""

    lambdas: tuple[Scalar, ...] = ()
    betas: tuple[Scalar, ...] = ()

    def __post_init__(self) -> None:
        if len(self.lambdas) != len(self.betas):
            raise DomainError("lambda and beta vectors must have the same length")
        lam = tuple(_exact_real(v, "lambda") for v in self.lambdas)
        bet = tuple(_exact_real(v, "beta") for v in self.betas)
        for v in lam:
            if sign(v) <= 0:
                raise DomainError("every lambda must be positive")
        for v in bet:
            if sign(v) <= 0 or sign(v - 1) > 0:
                raise DomainError("every beta must lie in (0, 1]")
        for v in bet:
            if not isinstance(v, Fraction):
                raise DomainError("beta must be rational")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "betas", bet)

    def merge(self, other: "GeneratorSet") -> "GeneratorSet":
        pairs = list(zip(self.lambdas, self.betas))
        for pair in zip(other.lambdas, other.betas):
            if pair not in pairs:
                pairs.append(pair)
        return GeneratorSet(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def monomial(self, k: Sequence[int], l: int) -> TMono:
        weight: Scalar = Fraction(0)
        power = Fraction(-l)
        for kj, lam, beta in zip(k, self.lambdas, self.betas):
            if kj:
                weight = weight + lam * kj
                power += beta * kj
        return TMono(weight, power, 0)

    def generator_monomials(self) -> list[TMono]:
        gens = [X_INV] + [TMono(lam, beta, 0) for lam, beta in zip(self.lambdas, self.betas)]
        return sorted(set(gens), reverse=True)

    def indices(self, mono: TMono, search: int = 12) -> tuple[tuple[int, ...], int] | None:
        """A grid index (k, l) for ``mono``, searched with |k_j| <= ``search``."""
        n = len(self.lambdas)
        for k in itertools.product(range(-search, search + 1), repeat=n):
            weight: Scalar = Fraction(0)
            power = Fraction(0)
            for kj, lam, beta in zip(k, self.lambdas, self.betas):
                weight = weight + lam * kj
                power += beta * kj
            if weight == mono.weight:
                l = power - mono.power
                if l.denominator == 1:
                    return tuple(k), int(l)
        return None


EMPTY_GENERATORS = GeneratorSet()


def _generators_of(mono: TMono) -> GeneratorSet:
    if mono.weight == 0:
        return EMPTY_GENERATORS
    w = mono.weight
    return GeneratorSet((abs(w) if isinstance(w, Fraction) else (w if sign(w) > 0 else -w),), (Fraction(1),))


class Transseries(LazySeries):
    """A lazily evaluated grid-based transseries."""

    ONE = T_ONE
    __slots__ = ("generators",)

    def __init__(self, trunc, candidates, *, finite=None, certificate=None, generators: GeneratorSet | None = None):
        super().__init__(trunc, candidates, finite=finite, certificate=certificate)
        if generators is None:
            generators = EMPTY_GENERATORS
            if finite:
                for m in finite:
                    if m.weight != 0:
                        generators = generators.merge(_generators_of(m))
        self.generators = generators

    def _derive(self, trunc, candidates, *, finite=None, certificate=None, others=()):
        gens = self.generators
        for o in others:
            if isinstance(o, Transseries):
                gens = gens.merge(o.generators)
        return Transseries(trunc, candidates, finite=finite, certificate=certificate, generators=gens)

    def _coerce(self, other: object):
        if isinstance(other, Transseries):
            return other
        return None

    @classmethod
    def from_terms(cls, terms, certificate=None):  # type: ignore[override]
        d: Terms = {}
        items = terms.items() if isinstance(terms, dict) else terms
        for m, c in items:
            d[m] = d.get(m, 0) + as_scalar(c)
        return cls(None, None, finite=d)

    def level_bound(self, level: int) -> TMono | None:
        cert = self.certificate
        if cert is None or not cert.seeds:
            return None
        top = max(cert.seeds)
        if not cert.gens:
            return min(cert.seeds)
        return top * (max(cert.gens) ** level)

    def __str__(self) -> str:
        from .syntax import render_value

        return render_value(self)

    def __repr__(self) -> str:
        return f"Transseries({self})"


# --------------------------------------------------------------------------
# constructors


def ts_monomial(coeff: Scalar | int = 1, weight: Scalar | int = 0, power: Fraction | int = 0, log: int = 0) -> Transseries:
    return Transseries(None, None, finite={TMono(weight, power, log): as_scalar(coeff)})


def ts_constant(c: Scalar | int) -> Transseries:
    return ts_monomial(c)


def ts_from_terms(terms: Iterable[tuple[TMono, Scalar]] | Terms) -> Transseries:
    return Transseries.from_terms(terms)


def ts_grid(
    rule: Callable[[tuple[int, ...], int], Scalar],
    generators: GeneratorSet,
    k0: Sequence[int] | None = None,
    l0: int = 0,
    k_max: Sequence[int | None] | None = None,
) -> Transseries:
    """sum over k >= k0 (componentwise, up to ``k_max``) and l >= l0 of rule(k, l) x^(beta.k - l) e^(-lambda.k x)."""
    n = len(generators.lambdas)
    k_start = tuple(k0) if k0 is not None else (0,) * n
    k_stop = tuple(k_max) if k_max is not None else (None,) * n
    if len(k_start) != n or len(k_stop) != n:
        raise DomainError("k0 and k_max must match the number of generators")

    def trunc(bound: TMono) -> Terms:
        out: Terms = {}
        cap = config.term_cap() * 16
        count = 0

        def rec(i: int, k: list[int]) -> None:
            nonlocal count
            if i == n:
                l = l0
                while True:
                    mono = generators.monomial(k, l)
                    if mono < bound:
                        return
                    c = as_scalar(rule(tuple(k), l))
                    if c != 0:
                        v = out.get(mono, 0) + c
                        if v == 0:
                            out.pop(mono, None)
                        else:
                            out[mono] = v
                    l += 1
                    count += 1
                    if count > cap:
                        raise TermCapError("grid enumeration exceeded the term cap", cap_name="CONWAY_TERM_CAP", cap_value=cap)
            kj = k_start[i]
            while k_stop[i] is None or kj <= k_stop[i]:
                k[i] = kj
                trial = list(k[: i + 1]) + list(k_start[i + 1 :])
                if generators.monomial(trial, l0) < bound:
                    break
                rec(i + 1, k)
                kj += 1
            k[i] = k_start[i]

        rec(0, list(k_start))
        return out

    seed = generators.monomial(k_start, l0)
    gens = [X_INV] + [
        TMono(lam, beta, 0) for lam, beta, stop, start in zip(generators.lambdas, generators.betas, k_stop, k_start)
        if stop is None or stop > start
    ]
    gens = sorted(set(gens), reverse=True)

    def candidates() -> Iterator[TMono]:
        return (seed * m for m in monoid_candidates(CandidateList(iter(gens)), T_ONE))

    return Transseries(trunc, candidates, certificate=GridCertificate([seed], gens), generators=generators)


def ei_transseries() -> Transseries:
    """e^x sum_k k! x^(-k-1): the large-x expansion of Ei."""
    gens = GeneratorSet((Fraction(1),), (Fraction(1),))
    return ts_grid(lambda k, l: Fraction(math.factorial(l)), gens, k0=(-1,), l0=0, k_max=(-1,))


# --------------------------------------------------------------------------
# algebra


def _check(a: object) -> Transseries:
    if not isinstance(a, Transseries):
        raise TypeError("expected a Transseries")
    return a


def ts_add(a: Transseries, b: Transseries) -> Transseries:
    return _check(a) + _check(b)


def ts_scale(c: Scalar | int, a: Transseries) -> Transseries:
    return _check(a).scale(as_scalar(c))


def ts_neg(a: Transseries) -> Transseries:
    return -_check(a)


def ts_sub(a: Transseries, b: Transseries) -> Transseries:
    return _check(a) - _check(b)


def ts_mul(a: Transseries, b: Transseries) -> Transseries:
    return _check(a) * _check(b)


def ts_inverse(a: Transseries, order: int | None = None) -> Transseries:
    """1/a by factoring out the dominant monomial; ``order`` truncates the geometric series."""
    a = _check(a)
    if a.is_finite and not a.finite_terms():
        raise ZeroDivisionError("inverse of the zero transseries")
    if order is None:
        return a.inverse()
    mono, c, rest = a.split_leading()
    geometric = rest.compose(lambda k: Fraction(-1) ** k, finite_order=order)
    return geometric.shift(T_ONE / mono).scale(1 / c)


def ts_cmp(a: Transseries, b: Transseries, max_candidates: int | None = None) -> int:
    """Sign of the dominant coefficient of a - b."""
    return (_check(a) - _check(b)).sign(max_candidates)


# --------------------------------------------------------------------------
# differentiation and integration


def _diff_mono(m: TMono, c: Scalar) -> Terms:
    out: Terms = {}
    if m.weight != 0:
        out[m] = -m.weight * c
    if m.power != 0:
        key = TMono(m.weight, m.power - 1, m.log)
        out[key] = out.get(key, 0) + m.power * c
    if m.log:
        key = TMono(m.weight, m.power - 1, m.log - 1)
        out[key] = out.get(key, 0) + m.log * c
    return {k: v for k, v in out.items() if v != 0}


def _diff_head(m: TMono) -> TMono:
    return m if m.weight != 0 else m * X_INV


def _diff_outputs(m: TMono) -> list[TMono]:
    outs = []
    if m.weight != 0:
        outs.append(m)
    outs.append(m * X_INV)
    if m.log:
        outs.append(TMono(m.weight, m.power - 1, m.log - 1))
    return outs


def ts_diff(a: Transseries) -> Transseries:
    a = _check(a)
    if a.is_finite:
        out: Terms = {}
        for m, c in a.finite_terms().items():
            out = add_terms(out, _diff_mono(m, c))
        return a._derive(None, None, finite=out, others=(a,))

    def trunc(bound: TMono) -> Terms:
        out: Terms = {}
        for m, c in a.truncate(bound).items():
            out = add_terms(out, _diff_mono(m, c))
        return {m: c for m, c in out.items() if not m < bound}

    def candidates() -> Iterator[TMono]:
        return merge_family((_diff_head(m), _diff_outputs(m)) for m in a.candidates())

    cert = None
    if a.certificate is not None:
        cert = GridCertificate(a.certificate.seeds, tuple(dict.fromkeys(a.certificate.gens + (X_INV,))))
    return a._derive(trunc, candidates, certificate=cert, others=(a,))


def _falling(p: Fraction, j: int) -> Fraction:
    out = Fraction(1)
    for i in range(j):
        out *= p - i
    return out


def _integrate_mono(m: TMono, c: Scalar, bound: TMono | None) -> Terms:
    """Antiderivative of c*m with the finite-part constant convention, terms >= bound."""
    out: Terms = {}
    if m.weight == 0:
        if m.power == -1:
            out[TMono(0, 0, m.log + 1)] = c / (m.log + 1)
        else:
            q = m.power + 1
            fact = Fraction(1)
            for j in range(m.log + 1):
                # d/dx[x^q L^i] = q x^(q-1) L^i + i x^(q-1) L^(i-1)
                out[TMono(0, q, m.log - j)] = c * Fraction((-1) ** j) * fact / q ** (j + 1)
                fact *= m.log - j
        return {k: v for k, v in out.items() if v != 0 and (bound is None or not k < bound)}
    if m.log:
        raise UnsupportedFragmentError("integration of exponentially small terms with ln(x) factors")
    w = m.weight
    j = 0
    cap = config.term_cap()
    while True:
        key = TMono(w, m.power - j, 0)
        if bound is not None and key < bound:
            break
        coeff = _falling(m.power, j)
        if coeff == 0:
            break
        out[key] = -c * coeff / (w ** (j + 1))
        j += 1
        if bound is None and j > cap:
            raise TermCapError("antiderivative is an infinite series; pass a bound", cap_name="CONWAY_TERM_CAP", cap_value=cap)
        if j > 16 * cap:
            raise TermCapError("antiderivative needs too many terms", cap_name="CONWAY_TERM_CAP", cap_value=cap)
    return out


def _integral_is_finite(m: TMono) -> bool:
    if m.weight == 0:
        return True
    return m.power.denominator == 1 and m.power >= 0


def _integral_head(m: TMono) -> TMono:
    if m.weight != 0:
        return m
    if m.power == -1:
        return TMono(0, 0, m.log + 1)
    return m * X


def _integral_outputs(m: TMono) -> Iterable[TMono]:
    if m.weight == 0:
        if m.power == -1:
            return [TMono(0, 0, m.log + 1)]
        return [TMono(0, m.power + 1, m.log - j) for j in range(m.log + 1)]
    if _integral_is_finite(m):
        return [TMono(m.weight, m.power - j, 0) for j in range(int(m.power) + 1)]
    return (TMono(m.weight, m.power - j, 0) for j in itertools.count())


_X_LOG = TMono(0, 1, 1)


def ts_integrate(a: Transseries) -> Transseries:
    """Termwise antiderivative; decaying parts get zero constant and x^-1 goes to ln x."""
    a = _check(a)
    if a.is_finite and all(_integral_is_finite(m) for m in a.finite_terms()):
        out: Terms = {}
        for m, c in a.finite_terms().items():
            out = add_terms(out, _integrate_mono(m, c, None))
        return a._derive(None, None, finite=out, others=(a,))

    def trunc(bound: TMono) -> Terms:
        out: Terms = {}
        for m, c in a.truncate(bound / _X_LOG).items():
            out = add_terms(out, _integrate_mono(m, c, bound))
        return {m: c for m, c in out.items() if not m < bound}

    def candidates() -> Iterator[TMono]:
        return merge_family((_integral_head(m), _integral_outputs(m)) for m in a.candidates())

    return a._derive(trunc, candidates, others=(a,))


# --------------------------------------------------------------------------
# composition with x -> alpha*x + beta


def _shift_factor(p: Fraction, log: int, ratio: Fraction, bound_rel: TMono) -> Terms:
    """(1 + r/x)**p * (ln x + ln(1 + r/x))**log as a finite dict, terms >= bound_rel."""
    u_terms: Terms = {X_INV: ratio} if ratio else {}
    if u_terms and _cmp_scalar(bound_rel.weight, 0) > 0 and (p.denominator != 1 or p < 0 or log):
        cap = config.term_cap()
        raise TermCapError(
            "shifted expansion has infinitely many terms above the bound", cap_name="CONWAY_TERM_CAP", cap_value=cap
        )
    out: Terms = {}
    # binomial series
    j = 0
    power: Terms = {T_ONE: Fraction(1)}
    coeff = Fraction(1)
    while power:
        out = add_terms(out, power, coeff)
        j += 1
        coeff = coeff * (p - j + 1) / j
        if coeff == 0:
            break
        power = mul_terms(power, u_terms, bound_rel)
    if log:
        ln1p: Terms = {}
        j = 1
        power = dict(u_terms)
        while power:
            ln1p = add_terms(ln1p, power, Fraction((-1) ** (j - 1), j))
            j += 1
            power = mul_terms(power, u_terms, bound_rel)
        base = add_terms({LOG_X: Fraction(1)}, ln1p)
        total: Terms = {T_ONE: Fraction(1)}
        for _ in range(log):
            total = mul_terms(total, base, bound_rel)
        out = mul_terms(out, total, bound_rel)
    return {m: c for m, c in out.items() if not m < bound_rel}


def ts_compose_affine(a: Transseries, alpha: Fraction | int = 1, beta: Fraction | int = 0) -> Transseries:
    """a(alpha*x + beta) for rational alpha > 0."""
    a = _check(a)
    alpha = Fraction(alpha)
    beta = Fraction(beta)
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    ratio = beta / alpha

    def scaled(m: TMono) -> TMono:
        return TMono(m.weight * alpha, m.power, m.log)

    def unscaled(m: TMono) -> TMono:
        return TMono(m.weight / alpha, m.power, m.log)

    def image(m: TMono, c: Scalar, bound: TMono) -> Terms:
        if m.log and alpha != 1:
            raise UnsupportedFragmentError("rescaling ln(x) factors is not supported")
        # the shift factor carries the full (ln x + ...)^log, so the head drops it
        head = TMono(m.weight * alpha, m.power, 0)
        factor = c
        if m.power:
            factor = factor * scalar_pow(alpha, m.power)
        if m.weight != 0 and beta:
            factor = factor * scalar_exp(-m.weight * beta)
        rel = _shift_factor(m.power, m.log, ratio, bound / head)
        return {head * k: v * factor for k, v in rel.items()}

    def trunc(bound: TMono) -> Terms:
        out: Terms = {}
        for m, c in a.truncate(unscaled(bound)).items():
            out = add_terms(out, image(m, c, bound))
        return out

    if a.is_finite and not beta:
        out: Terms = {}
        for m, c in a.finite_terms().items():
            if m.log and alpha != 1:
                raise UnsupportedFragmentError("rescaling ln(x) factors is not supported")
            out = add_terms(out, {scaled(m): c * scalar_pow(alpha, m.power) if m.power else c})
        return a._derive(None, None, finite=out, others=(a,))

    def candidates() -> Iterator[TMono]:
        def stream(m: TMono) -> Iterator[TMono]:
            head = scaled(m)
            parts = [(head * TMono(0, -j, -i) for j in itertools.count()) for i in range(m.log + 1)]
            return merge_candidates(*parts)

        return merge_family((scaled(m), stream(m)) for m in a.candidates())

    return a._derive(trunc, candidates, others=(a,))


# --------------------------------------------------------------------------
# convergence in the coefficientwise topology


def ts_converges(seq: Iterable[Transseries], bound: TMono, patience: int = 3) -> Transseries | NeedsMoreTerms:
    """Coefficientwise limit above ``bound``, or NeedsMoreTerms if the window never settles."""
    got = stabilised_limit((t.truncate(bound) for t in seq), bound, patience)
    if got is None:
        return NeedsMoreTerms("coefficients did not stabilise above the requested monomial")
    return Transseries.from_terms(got)


# --------------------------------------------------------------------------
# evaluation


def _positive_infinite(x0: SurrealNF) -> None:
    if not isinstance(x0, SurrealNF):
        raise DomainError("evaluation point must be a normal form")
    if not x0.terms:
        raise DomainError("evaluation point is finite; use real evaluation")
    mono, c = x0.terms[0]
    if not mono > ONE_MONO:
        raise DomainError("evaluation point is finite; use real evaluation")
    if sign(c) <= 0:
        raise DomainError("evaluation point must be positive")


class _Substitution:
    """Images of transmonomials at a fixed positive infinite surreal, memoised."""

    def __init__(self, x0: SurrealNF) -> None:
        _positive_infinite(x0)
        self.x0 = x0
        self.lead_mono, self.lead_coeff = x0.terms[0]
        self.stream = TermStream.from_nf(x0)
        _, _, self.rest = self.stream.split_leading()
        self._exp: dict[Any, Any] = {}
        self._pow: dict[Fraction, TermStream] = {}
        self._log: dict[int, TermStream] = {}
        self._ln: TermStream | None = None

    def exp_part(self, weight: Scalar):
        if weight not in self._exp:
            if not isinstance(weight, Fraction):
                raise UnsupportedFragmentError("evaluation needs rational exponential weights")
            self._exp[weight] = exp_nf(nf_scale(self.x0, -weight))
        return self._exp[weight]

    def power_part(self, p: Fraction) -> TermStream:
        if p not in self._pow:
            c = scalar_pow(self.lead_coeff, p)
            series = self.rest.binomial_power(p)
            self._pow[p] = series.shift(self.lead_mono ** p).scale(c)
        return self._pow[p]

    def ln(self) -> TermStream:
        if self._ln is None:
            self._ln = ln_nf(self.x0)
        return self._ln

    def log_part(self, m: int) -> TermStream:
        if m not in self._log:
            self._log[m] = self.ln() ** m
        return self._log[m]

    def lead(self, m: TMono):
        out = self.lead_mono ** m.power if m.power else ONE_MONO
        if m.weight != 0:
            out = out * self.exp_part(m.weight).atom
        if m.log:
            out = out * (self.ln().upper_bound() ** m.log)
        return out

    def image(self, m: TMono) -> TermStream:
        parts: list[TermStream] = []
        if m.weight != 0:
            parts.append(self.exp_part(m.weight).stream())
        if m.power:
            parts.append(self.power_part(m.power))
        if m.log:
            parts.append(self.log_part(m.log))
        if not parts:
            return TermStream.from_nf(nf_const(1))
        out = parts[0]
        for p in parts[1:]:
            out = out * p
        return out


def ts_eval_at(a: Transseries, x0: SurrealNF) -> TermStream:
    """Substitute a positive infinite surreal for x; the result is a lazy normal form."""
    a = _check(a)
    sub = _Substitution(x0)
    images: dict[TMono, TermStream] = {}

    def image(m: TMono) -> TermStream:
        if m not in images:
            images[m] = sub.image(m)
        return images[m]

    if a.is_finite:
        total = TermStream.from_nf(nf_const(0))
        for m, c in sorted_terms(a.finite_terms()):
            total = total + image(m).scale(c)
        return total

    cap = config.term_cap()

    def trunc(bound) -> Terms:
        last = None
        for i, m in enumerate(a.candidates()):
            if sub.lead(m) < bound:
                break
            last = m
            if i > cap:
                raise TermCapError("substitution needs too many source terms", cap_name="CONWAY_TERM_CAP", cap_value=cap)
        if last is None:
            return {}
        out: Terms = {}
        for m, c in a.truncate(last).items():
            out = add_terms(out, image(m).truncate(bound), c)
        return out

    def candidates():
        return merge_family((sub.lead(m), image(m).candidates()) for m in a.candidates())

    return TermStream(trunc, candidates)


def ts_eval_real(a: Transseries, x0: Scalar | int) -> Scalar:
    """Value of a finite transseries at a real point; exact when the constants allow it."""
    a = _check(a)
    if not a.is_finite:
        raise DomainError("only finite transseries can be evaluated at a real point")
    x0 = as_scalar(x0)
    total: Scalar = Fraction(0)
    exact = True
    numeric = mpmath.mpf(0)
    for m, c in a.finite_terms().items():
        try:
            value = _eval_mono_exact(m, x0)
            total = total + c * value
            numeric += to_mpf(c) * to_mpf(value)
        except UnsupportedFragmentError:
            exact = False
            numeric += to_mpf(c) * _eval_mono_numeric(m, x0)
    if exact:
        return total
    return Ball(float(numeric), abs(float(numeric)) * 1e-15 + 1e-300)


def _eval_mono_exact(m: TMono, x0: Scalar) -> Scalar:
    if sign(x0) < 0:
        raise DomainError("real evaluation needs a non-negative point")
    if sign(x0) == 0:
        if m.power < 0 or m.log:
            raise DomainError("monomial is singular at 0")
        return Fraction(1) if m.power == 0 else Fraction(0)
    value: Scalar = Fraction(1)
    if m.power:
        value = scalar_pow(x0, m.power)
    if m.weight != 0:
        value = value * scalar_exp(-m.weight * x0)
    if m.log:
        value = value * scalar_pow(scalar_ln(x0), m.log) if m.log > 1 else value * scalar_ln(x0)
    return value


def _eval_mono_numeric(m: TMono, x0: Scalar) -> mpmath.mpf:
    x = to_mpf(x0)
    if x <= 0 and (m.power < 0 or m.log):
        raise DomainError("monomial is singular at 0")
    out = mpmath.power(x, mpmath.mpf(m.power.numerator) / m.power.denominator) if m.power else mpmath.mpf(1)
    if m.weight != 0:
        out *= mpmath.exp(-to_mpf(m.weight) * x)
    if m.log:
        out *= mpmath.log(x) ** m.log
    return out


def ts_evaluate(a: Transseries, point: SurrealNF | Scalar | int):
    """Real evaluation for real points, substitution for infinite ones."""
    if isinstance(point, SurrealNF):
        if point.is_real():
            return ts_eval_real(a, point.real_value())
        return ts_eval_at(a, point)
    return ts_eval_real(a, point)


def ts_definite_integral(a: Transseries, lower, upper):
    """F(upper) - F(lower) for the finite-part antiderivative F."""
    anti = ts_integrate(a)
    hi = ts_evaluate(anti, upper)
    lo = ts_evaluate(anti, lower)
    if isinstance(hi, TermStream) or isinstance(lo, TermStream):
        hi_s = hi if isinstance(hi, TermStream) else TermStream.from_nf(nf_const(hi))
        lo_s = lo if isinstance(lo, TermStream) else TermStream.from_nf(nf_const(lo))
        return hi_s - lo_s
    return hi - lo


# --------------------------------------------------------------------------
# JSON


def ts_to_json(a: Transseries, terms: int = 16) -> dict:
    """Coefficient dump keyed by grid index (k, l) and log power m."""
    a = _check(a)
    items, tail = a.take(terms)
    gens = a.generators
    out = []
    for m, c in items:
        entry: dict[str, Any] = {
            "weight": format_scalar(m.weight),
            "power": str(m.power),
            "m": m.log,
            "coeff": format_scalar(c),
        }
        idx = gens.indices(TMono(m.weight, m.power, 0)) if gens.lambdas or m.weight == 0 else None
        if idx is not None:
            entry["k"] = list(idx[0])
            entry["l"] = idx[1]
        out.append(entry)
    return {
        "generators": {
            "lambda": [format_scalar(v) for v in gens.lambdas],
            "beta": [str(v) for v in gens.betas],
        },
        "terms": out,
        "truncated": tail is not None,
        "remainder": None if tail is None else {"weight": format_scalar(tail.weight), "power": str(tail.power), "m": tail.log},
    }


__all__ = [
    "EMPTY_GENERATORS",
    "GeneratorSet",
    "LOG_X",
    "TMono",
    "T_ONE",
    "Transseries",
    "X",
    "X_INV",
    "ei_transseries",
    "ts_add",
    "ts_cmp",
    "ts_compose_affine",
    "ts_constant",
    "ts_converges",
    "ts_definite_integral",
    "ts_diff",
    "ts_eval_at",
    "ts_eval_real",
    "ts_evaluate",
    "ts_from_terms",
    "ts_grid",
    "ts_integrate",
    "ts_inverse",
    "ts_monomial",
    "ts_mul",
    "ts_neg",
    "ts_scale",
    "ts_sub",
    "ts_to_json",
]
