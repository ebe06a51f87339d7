"""Ei, erfi, ln Gamma and Stirling: exact expansions plus independent numeric oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable

import mpmath
import numpy as np

from . import quadrature
from .borel import FormalPowerSeries, formal_laplace
from .errors import DomainError
from .scalar import LN2PI, Ball, to_mpf
from .surreal import OMEGA, ExpResult, SurrealNF, TermStream, exp_nf
from .transseries import GeneratorSet, TMono, Transseries, ts_eval_at, ts_from_terms, ts_grid


@dataclass(frozen=True)
class NamedExpansion:
    name: str
    expansion: Any
    validity: str
    oracle: Callable[..., Any] | None = None


# --------------------------------------------------------------------------
# Ei


def ei_asymptotic() -> FormalPowerSeries:
    """sum k! x^(-k-1)."""
    return FormalPowerSeries(lambda k: Fraction(math.factorial(k)), plane="x", gevrey=(1.0, 1.0), name="Ei")


def _ei_series(x: mpmath.mpf) -> tuple[mpmath.mpf, mpmath.mpf]:
    # gamma + ln x + sum x^k / (k k!)
    total = mpmath.mpf(0)
    term = mpmath.mpf(1)
    k = 0
    while True:
        k += 1
        term *= x / k
        piece = term / k
        total += piece
        if abs(piece) < abs(total) * mpmath.eps and k > x:
            break
    return mpmath.euler + mpmath.log(abs(x)) + total, abs(piece) * 2


def ei_mp(x, dps: int = 60) -> mpmath.mpf:
    """Ei(x) for x > 0 as an mpmath number carrying ``dps`` digits."""
    with mpmath.workdps(dps):
        xm = to_mpf(x) if not isinstance(x, mpmath.mpf) else x
        if xm <= 0:
            raise DomainError("Ei is evaluated here only for x > 0")
        return _ei_series(xm)[0]


def ei_oracle(x, dps: int = 60, cross_check: bool = False) -> Ball:
    """Ei(x) for x > 0 from its convergent series at ``dps`` digits.

    With ``cross_check`` the value is compared with e^x times the principal
    value Laplace integral of 1/(1-p), computed by quadrature.
    """
    with mpmath.workdps(dps):
        xm = to_mpf(x) if not isinstance(x, mpmath.mpf) else x
        if xm <= 0:
            raise DomainError("ei_oracle needs x > 0")
        value, err = _ei_series(xm)
        if cross_check:
            from .borel import pade_continue, pv_laplace

            model = pade_continue(FormalPowerSeries(lambda k: Fraction(1), plane="p"), 2)
            check = pv_laplace(model, float(xm))
            other = mpmath.exp(xm) * check.mid
            if abs(other - value) > 1e-8 * abs(value) + mpmath.exp(xm) * check.rad * 10:
                raise ArithmeticError(f"Ei oracle cross-check failed at x={x}: {value} vs {other}")
        return Ball(value, err + abs(value) * mpmath.mpf(10) ** (-dps + 5))


def e1_oracle(x, dps: int = 60) -> Ball:
    """E_1(x) = -gamma - ln x - sum (-x)^k / (k k!), for x > 0."""
    with mpmath.workdps(dps + int(float(to_mpf(x)) / 2.3) + 5):
        xm = to_mpf(x)
        if xm <= 0:
            raise DomainError("e1_oracle needs x > 0")
        value, err = _ei_series(-xm)
        return Ball(-value, err + abs(value) * mpmath.mpf(10) ** (-dps + 5))


def ei_weighted_constant(grid) -> float:
    """sup over the grid of x^(1/2) |Ei(x) - e^x * least-term sum|."""
    from .borel import least_term_error_constant

    series = ei_asymptotic()

    def oracle(x):
        return ei_mp(x) * mpmath.exp(-x)

    return least_term_error_constant(oracle, series, Fraction(-1, 2), 1, grid)


# --------------------------------------------------------------------------
# erfi


def erfi_borel() -> FormalPowerSeries:
    """G(p) = 1/2 (1-p)^(-1/2), from (p-1) G' + G/2 = 0 with G(0) = 1/2."""
    values = [Fraction(1, 2)]

    def coeff(n: int) -> Fraction:
        while len(values) <= n:
            k = len(values) - 1
            # (p-1)G' + G/2 = 0 termwise: (k+1) g_{k+1} = (k + 1/2) g_k
            values.append(values[-1] * (k + Fraction(1, 2)) / (k + 1))
        return values[n]

    return FormalPowerSeries(coeff, plane="p", name="erfi Borel transform")


def erfi_g_series() -> FormalPowerSeries:
    """The formal g(t) = sum a_n t^(-n-1) with g' + (1 + 1/(2t)) g = 1/(2t)."""
    return formal_laplace(erfi_borel())


def erfi_transseries() -> Transseries:
    """int_0^x e^(s^2) ds written in t = x^2: sum a_n t^(-n-1/2) e^t."""
    g = erfi_g_series()
    gens = GeneratorSet((Fraction(1),), (Fraction(1, 2),))
    # k = -1 gives t^(-1/2) e^t; l = n gives the extra t^(-n)
    return ts_grid(lambda k, l: g.coeff(l), gens, k0=(-1,), l0=0, k_max=(-1,))


def erfi_asymptotic_value(x, terms: int | None = None, dps: int = 40) -> mpmath.mpf:
    """Least-term truncation of the erfi expansion at real x > 1."""
    with mpmath.workdps(dps):
        xm = to_mpf(x)
        t = xm * xm
        g = erfi_g_series()
        n_terms = terms if terms is not None else int(mpmath.floor(t))
        total = mpmath.mpf(0)
        for n in range(n_terms + 1):
            total += to_mpf(g.coeff(n)) / t ** (n + 1)
        return xm * mpmath.exp(t) * total


def erfi_integral_oracle(x: float, tol: float = 1e-13) -> Ball:
    """int_0^x e^(s^2) ds by adaptive quadrature."""
    value, err = quadrature.integrate(lambda s: np.exp(s * s), np.linspace(0.0, float(x), 9), tol=tol)
    return Ball(value, err)


# --------------------------------------------------------------------------
# Bernoulli numbers, ln Gamma, Stirling


@lru_cache(maxsize=None)
def _bernoulli_row(n: int) -> tuple[Fraction, ...]:
    # Akiyama-Tanigawa: returns B_0..B_n (with B_1 = +1/2, fixed below)
    out = []
    a = [Fraction(0)] * (n + 1)
    for m in range(n + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
        out.append(a[0])
    return tuple(out)


def bernoulli(n: int) -> Fraction:
    """Exact Bernoulli number B_n with B_1 = -1/2."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 1:
        return Fraction(-1, 2)
    if n > 1 and n % 2:
        return Fraction(0)
    return _bernoulli_row(n)[n]


def lngamma_coefficient(power: int) -> Fraction:
    """Coefficient of x^(-power) in the Stirling series of ln Gamma (odd powers only)."""
    if power < 1 or power % 2 == 0:
        return Fraction(0)
    n2 = power + 1
    return bernoulli(n2) / (n2 * (n2 - 1))


def lngamma_at_omega() -> Transseries:
    """x ln x - x - (1/2) ln x + (1/2) ln(2 pi) + sum B_2n/(2n(2n-1)) x^(1-2n)."""
    head = ts_from_terms(
        {
            TMono(0, 1, 1): Fraction(1),
            TMono(0, 1, 0): Fraction(-1),
            TMono(0, 0, 1): Fraction(-1, 2),
            TMono(0, 0, 0): LN2PI / 2,
        }
    )
    tail = ts_grid(lambda k, l: lngamma_coefficient(l), GeneratorSet(), k0=(), l0=1)
    return head + tail


def sum_ln_to_omega() -> Transseries:
    """ln Gamma(x + 1) = ln Gamma(x) + ln x, the value denoted sum_{k<=omega} ln k."""
    return lngamma_at_omega() + ts_from_terms({TMono(0, 0, 1): Fraction(1)})


def lngamma_value_at(point: SurrealNF = OMEGA) -> TermStream:
    return ts_eval_at(lngamma_at_omega(), point)


def stirling_at_omega(point: SurrealNF = OMEGA) -> ExpResult:
    """Gamma at an infinite point by exponentiating ln Gamma there.

    The result is an atomic monomial e^(w ln w - w) w^(-1/2), the scalar
    sqrt(2 pi) and the series 1 + 1/(12 w) + ... .
    """
    return exp_nf(lngamma_value_at(point))


def stirling_coefficients(n: int) -> list[Fraction]:
    """Coefficients of w^0 .. w^-(n-1) in the Stirling bracket series."""
    from .surreal import omega_pow

    series = stirling_at_omega().series
    terms = series.truncate(omega_pow(-(n - 1)).terms[0][0])
    out = []
    for k in range(n):
        mono = omega_pow(-k).terms[0][0]
        out.append(terms.get(mono, Fraction(0)))
    return out


_BINET_TERMS = 30


def _binet_kernel(p: np.ndarray) -> np.ndarray:
    """The Laplace integrand of ln Gamma, (1/2 - 1/p + 1/(e^p - 1))/p, vectorised.

    Below p = 1 its Taylor series in Bernoulli numbers avoids the cancellation.
    """
    p = np.asarray(p, dtype=float)
    small = p < 1.0
    out = np.empty_like(p)
    ps = p[small]
    acc = np.zeros_like(ps)
    for n in range(_BINET_TERMS, 0, -1):
        acc = acc * ps * ps + float(bernoulli(2 * n) / math.factorial(2 * n))
    out[small] = acc
    pl = p[~small]
    em = np.exp(-pl)
    out[~small] = (1 - pl / 2 - (pl / 2 + 1) * em) / (pl * pl * (em - 1))
    return out


def lngamma_oracle(n: float, tol: float = 1e-14) -> Ball:
    """ln Gamma(n) from the Borel-summed integral representation, by quadrature."""
    n = float(n)
    if n < 2:
        raise DomainError("lngamma_oracle needs n >= 2")
    cut = max(60.0 / n, 1.0)
    points = [0.0] + [min(cut, 2.0**j / n) for j in range(0, 12) if 2.0**j / n < cut] + [cut]
    integral, err = quadrature.integrate(lambda p: _binet_kernel(p) * np.exp(-n * p), sorted(set(points)), tol=tol)
    # the kernel is below 1/12 on [0, inf), so the tail is at most e^(-n cut)/(12 n)
    err += math.exp(-n * cut) / (12 * n)
    head = n * (math.log(n) - 1) - 0.5 * math.log(n) + 0.5 * math.log(2 * math.pi)
    return Ball(head + integral, err + 4e-16 * abs(head))


def lngamma_series_value(x, terms: int = 12, dps: int = 40, shift: bool = False) -> mpmath.mpf:
    """Numeric value of the truncated ln Gamma (or, with ``shift``, ln Gamma(x+1)) series at real x."""
    with mpmath.workdps(dps):
        xm = to_mpf(x)
        value = xm * mpmath.log(xm) - xm - mpmath.log(xm) / 2 + mpmath.log(2 * mpmath.pi) / 2
        for k in range(terms):
            power = 2 * k + 1
            c = lngamma_coefficient(power)
            value += mpmath.mpf(c.numerator) / c.denominator / xm**power
        if shift:
            value += mpmath.log(xm)
        return +value


def named_expansions() -> dict[str, NamedExpansion]:
    return {
        "ei": NamedExpansion("Ei", ei_asymptotic(), "x > 1, least-term truncation", ei_oracle),
        "erfi": NamedExpansion("int_0^x e^(s^2) ds", erfi_transseries(), "t = x^2 > 1", erfi_integral_oracle),
        "lngamma": NamedExpansion("ln Gamma", lngamma_at_omega(), "x > 0", lngamma_oracle),
        "sum-ln": NamedExpansion("sum_{k<=x} ln k", sum_ln_to_omega(), "x > 0", None),
    }
