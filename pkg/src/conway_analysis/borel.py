"""Borel transforms, Padé continuation and Laplace quadrature for Gevrey-1 series.

Two planes are used.  A series in the ``"x"`` plane means sum c_k x^(-k-1); a
series in the ``"p"`` plane means sum c_k p^k.  Coefficients are exact
(Fraction or symbolic scalars); numeric stages work in double precision or
mpmath.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np

from . import quadrature
from .errors import (
    DomainError,
    NotApplicableError,
    NotGevrey1Error,
    PadeRankError,
    PoleOnPathError,
    UnsupportedFragmentError,
)
from .scalar import Ball, Scalar, as_scalar, to_float, to_mpf

DEFAULT_TOL = 1e-10

CoeffFn = Callable[[int], Scalar]


class FormalPowerSeries:
    """A formal series given by a coefficient rule, memoised and thread-safe."""

    def __init__(
        self,
        coeff: CoeffFn | Sequence[Scalar],
        plane: str = "x",
        gevrey: tuple[float, float] | None = None,
        name: str = "",
    ) -> None:
        if plane not in ("x", "p"):
            raise ValueError("plane must be 'x' or 'p'")
        if callable(coeff):
            self._rule: CoeffFn = coeff
            self.degree: int | None = None
        else:
            values = [as_scalar(c) for c in coeff]
            while values and values[-1] == 0:
                values.pop()
            self.degree = len(values) - 1
            self._rule = lambda k, v=values: v[k] if k < len(v) else Fraction(0)
        self.plane = plane
        self.gevrey = gevrey
        self.name = name
        self._cache: list[Scalar] = []
        self._lock = threading.Lock()

    @classmethod
    def from_list(cls, values: Sequence[Scalar], plane: str = "x", name: str = "") -> "FormalPowerSeries":
        return cls(list(values), plane=plane, name=name)

    def coeff(self, k: int) -> Scalar:
        if k < 0:
            return Fraction(0)
        with self._lock:
            while len(self._cache) <= k:
                self._cache.append(as_scalar(self._rule(len(self._cache))))
            return self._cache[k]

    def coeffs(self, n: int) -> list[Scalar]:
        """The first ``n`` coefficients."""
        if n > 0:
            self.coeff(n - 1)
        return list(self._cache[:n])

    def check_gevrey(self, depth: int = 32) -> bool:
        """Whether the attached Gevrey bound holds on the first ``depth`` coefficients."""
        if self.gevrey is None:
            return True
        big_c, rho = self.gevrey
        for k, c in enumerate(self.coeffs(depth)):
            if abs(to_mpf(c)) > big_c * mpmath.factorial(k) * mpmath.mpf(rho) ** (-k) * (1 + 1e-12):
                return False
        return True

    def __repr__(self) -> str:
        head = ", ".join(str(c) for c in self.coeffs(4))
        return f"FormalPowerSeries({self.plane}: {head}, ...)"


def borel_transform(series: FormalPowerSeries) -> FormalPowerSeries:
    if series.plane != "x":
        raise DomainError("Borel transform expects a series in 1/x")
    gevrey = None
    if series.gevrey is not None:
        gevrey = series.gevrey
    return FormalPowerSeries(
        lambda k: series.coeff(k) / math.factorial(k), plane="p", gevrey=gevrey, name=series.name
    )


def formal_laplace(series: FormalPowerSeries) -> FormalPowerSeries:
    if series.plane != "p":
        raise DomainError("formal Laplace transform expects a series in p")
    return FormalPowerSeries(
        lambda k: series.coeff(k) * math.factorial(k), plane="x", gevrey=series.gevrey, name=series.name
    )


@dataclass(frozen=True)
class GevreyCertificate:
    constant: float
    rho: float
    window: int

    def __iter__(self):
        return iter((self.constant, self.rho))


def gevrey1_certificate(series: FormalPowerSeries, depth: int = 32) -> GevreyCertificate:
    """Fit |c_k| <= C k! rho^-k on k < depth; the returned C makes the bound hold there.

    For a p-plane series the k! is already divided out, so the fit is on |c_k| itself.
    """
    if depth < 4:
        raise ValueError("inspection depth must be at least 4")
    ks: list[int] = []
    logs: list[float] = []
    for k, c in enumerate(series.coeffs(depth)):
        if c == 0:
            continue
        mag = abs(to_mpf(c))
        if series.plane == "x":
            mag = mag / mpmath.factorial(k)
        ks.append(k)
        logs.append(float(mpmath.log(mag)))
    if len(ks) < 2:
        return GevreyCertificate(max([math.exp(v) for v in logs], default=0.0), 1.0, depth)
    slope = _slope(ks, logs)
    half = len(ks) // 2
    if half >= 2 and len(ks) - half >= 2:
        early = _slope(ks[:half], logs[:half])
        late = _slope(ks[half:], logs[half:])
        # Super-factorial growth shows up as a steadily climbing slope.
        if late - early > math.log(2.0):
            raise NotGevrey1Error(f"coefficient growth is faster than k! (slopes {early:.3g}, {late:.3g})")
    rho = math.exp(-slope)
    if not (1e-6 <= rho <= 1e6):
        raise NotGevrey1Error(f"fitted radius {rho:.3g} is outside the search range")
    constant = max(math.exp(v + k * math.log(rho)) for k, v in zip(ks, logs))
    return GevreyCertificate(constant, rho, depth)


def _slope(ks: Sequence[int], logs: Sequence[float]) -> float:
    if len(set(ks)) < 2:
        return 0.0
    slope, _ = np.polyfit(np.asarray(ks, dtype=float), np.asarray(logs, dtype=float), 1)
    return float(slope)


# --------------------------------------------------------------------------
# Padé continuation


@dataclass(frozen=True)
class Pole:
    location: complex
    residue: complex
    error: float
    multiplicity: int = 1


@dataclass(frozen=True)
class ContinuationModel:
    """P(p)/Q(p) with exact rational coefficients in ascending order, Q(0) = 1."""

    numerator: tuple[Fraction, ...]
    denominator: tuple[Fraction, ...]
    poles: tuple[Pole, ...] = field(default=())
    order: int = 0

    def __call__(self, p):
        num = np.polyval(np.asarray([float(c) for c in reversed(self.numerator)]), p)
        den = np.polyval(np.asarray([float(c) for c in reversed(self.denominator)]), p)
        return num / den

    def taylor(self, n: int) -> list[Fraction]:
        """First ``n`` Taylor coefficients of the model at p = 0."""
        out: list[Fraction] = []
        for k in range(n):
            acc = self.numerator[k] if k < len(self.numerator) else Fraction(0)
            for j in range(1, min(k, len(self.denominator) - 1) + 1):
                acc -= self.denominator[j] * out[k - j]
            out.append(acc)
        return out

    def real_poles(self, slack: float = 1e-9) -> list[Pole]:
        """Poles on the closed positive real axis, within ``slack``."""
        return [
            p
            for p in self.poles
            if abs(p.location.imag) <= slack * max(1.0, abs(p.location)) + p.error and p.location.real >= -slack
        ]

    @property
    def pole_radius(self) -> float:
        return max((abs(p.location) for p in self.poles), default=0.0)


def _solve_exact(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    n = len(rhs)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col] * inv
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] / a[i][i] for i in range(n)]


def pade_continue(series: FormalPowerSeries, order: int) -> ContinuationModel:
    """Padé model with numerator degree ``order`` and the smallest adequate denominator.

    Denominator degrees 0..order are tried in turn.  The first one whose
    approximant matches all 2*order+1 coefficients is kept, so exact rational
    inputs come back in lowest terms and the square case is the last resort.
    """
    if series.plane != "p":
        raise DomainError("Padé continuation expects a series in p")
    if order < 0:
        raise ValueError("order must be non-negative")
    coeffs = [Fraction(c) if not isinstance(c, Fraction) else c for c in _rational_coeffs(series, 2 * order + 1)]
    for m in range(order + 1):
        den = _denominator(coeffs, order, m)
        if den is None:
            continue
        num = _numerator(coeffs, den, order)
        if all(
            sum(den[j] * coeffs[k - j] for j in range(min(k, m) + 1)) == 0
            for k in range(order + 1, 2 * order + 1)
        ):
            while len(num) > 1 and num[-1] == 0:
                num.pop()
            while len(den) > 1 and den[-1] == 0:
                den.pop()
            return ContinuationModel(tuple(num), tuple(den), _poles(num, den), order)
    raise PadeRankError(f"no Padé approximant of order {order} reproduces the coefficients")


def _rational_coeffs(series: FormalPowerSeries, n: int) -> list[Fraction]:
    out = []
    for c in series.coeffs(n):
        if not isinstance(c, (Fraction, int)):
            raise UnsupportedFragmentError("Padé continuation needs rational coefficients")
        out.append(Fraction(c))
    return out


def _denominator(coeffs: list[Fraction], n: int, m: int) -> list[Fraction] | None:
    if m == 0:
        return [Fraction(1)]
    matrix = [[coeffs[k - j] if k - j >= 0 else Fraction(0) for j in range(1, m + 1)] for k in range(n + 1, n + m + 1)]
    rhs = [-coeffs[k] for k in range(n + 1, n + m + 1)]
    sol = _solve_exact(matrix, rhs)
    if sol is None:
        return None
    return [Fraction(1)] + sol


def _numerator(coeffs: list[Fraction], den: list[Fraction], n: int) -> list[Fraction]:
    return [sum(den[j] * coeffs[k - j] for j in range(min(k, len(den) - 1) + 1)) for k in range(n + 1)]


def _poles(num: list[Fraction], den: list[Fraction]) -> tuple[Pole, ...]:
    if len(den) <= 1:
        return ()
    with mpmath.workdps(40):
        desc = [mpmath.mpf(c.numerator) / c.denominator for c in reversed(den)]
        roots, err = mpmath.polyroots(desc, maxsteps=200, extraprec=200, error=True)
        dnum = [mpmath.mpf(c.numerator) / c.denominator for c in reversed(num)]
        dden = [k * desc[len(desc) - 1 - k] for k in range(len(desc) - 1, 0, -1)]
        poles = []
        for z in roots:
            slope = mpmath.polyval(dden, z)
            multiple = abs(slope) < mpmath.mpf(10) ** -15 * max(1, abs(z)) ** len(desc)
            residue = complex(mpmath.polyval(dnum, z) / slope) if not multiple else complex("nan")
            poles.append(Pole(complex(z), residue, float(err) + 1e-30, 2 if multiple else 1))
    return tuple(sorted(poles, key=lambda p: (abs(p.location), p.location.imag)))


# --------------------------------------------------------------------------
# Laplace quadrature


def _cutoff(model: ContinuationModel, x: float) -> float:
    return max(50.0 / x, 4.0 * model.pole_radius, 1.0)


def _tail_bound(model: ContinuationModel, x: float, cut: float) -> float:
    """Bound on |int_cut^inf e^(-xp) model(p) dp| using |Q(p)| >= |q_m| (p/2)^m."""
    num = [abs(float(c)) for c in model.numerator]
    m = len(model.denominator) - 1
    lead = abs(float(model.denominator[-1]))
    total = 0.0
    for i, a in enumerate(num):
        if a == 0:
            continue
        # int_cut^inf e^(-xp) p^(i-m) dp <= e^(-x cut) * cut^(i-m) * (sum over the incomplete gamma)
        power = i - m
        if power <= 0:
            integral = math.exp(-x * cut) * cut**power / x
        else:
            integral = float(mpmath.gammainc(power + 1, x * cut)) / x ** (power + 1)
        total += a * integral * 2.0**m / lead
    return total


def laplace_quadrature(model: ContinuationModel, x: float, tol: float = DEFAULT_TOL) -> Ball:
    """int_0^inf e^(-xp) model(p) dp, with an error estimate."""
    x = float(x)
    if x <= 0:
        raise DomainError("Laplace quadrature needs x > 0")
    if model.real_poles():
        raise PoleOnPathError("the continuation has a pole on the positive axis; use pv_laplace")
    cut = _cutoff(model, x)
    value, err = _integrate_regular(lambda p: np.exp(-x * p) * model(p), model, x, 0.0, cut, tol)
    return Ball(value, err + _tail_bound(model, x, cut))


def _breakpoints(model: ContinuationModel, x: float, lo: float, hi: float, avoid: Iterable[float] = ()) -> list[float]:
    points = {lo, hi}
    step = 1.0 / x
    while lo + step < hi:
        points.add(lo + step)
        step *= 2.0
    for pole in model.poles:
        r = pole.location.real
        if lo < r < hi:
            points.add(r)
    for r in avoid:
        if lo < r < hi:
            points.add(r)
    return sorted(points)


def _integrate_regular(f, model, x, lo, hi, tol, avoid=()):
    return quadrature.integrate(f, _breakpoints(model, x, lo, hi, avoid), tol=tol * 1e-2)


def pv_laplace(model: ContinuationModel, x: float, tol: float = DEFAULT_TOL) -> Ball:
    """Half-half average of the lateral Laplace integrals: the principal value at simple poles."""
    x = float(x)
    if x <= 0:
        raise DomainError("Laplace quadrature needs x > 0")
    on_axis = model.real_poles()
    if not on_axis:
        return laplace_quadrature(model, x, tol)
    if any(p.multiplicity > 1 for p in on_axis):
        raise UnsupportedFragmentError("principal value needs simple poles on the positive axis")
    locations = [p.location.real for p in on_axis]
    residues = [p.residue.real for p in on_axis]
    if any(r <= 0 for r in locations):
        raise UnsupportedFragmentError("pole at the origin")
    cut = _cutoff(model, x)
    def regular(p):
        out = model(p)
        out = np.real(out)
        for z, r in zip(locations, residues):
            out = out - r / (p - z)
        return np.exp(-x * p) * out

    # The singular parts are subtracted everywhere and integrated separately.
    value, err = _integrate_regular(regular, model, x, 0.0, cut, tol, avoid=locations)
    for z, r in zip(locations, residues):
        v, e = _pv_simple_pole(z, x, cut, tol)
        value += r * v
        err += abs(r) * e
    return Ball(value, err + _tail_bound(model, x, cut))


def _pv_simple_pole(z: float, x: float, cut: float, tol: float) -> tuple[float, float]:
    """PV int_0^cut e^(-xp)/(p - z) dp.

    Outside a symmetric window around z the integrand is regular.  Inside,
    the odd part of 1/q cancels and what remains is -2 e^(-xz) int_0^d sinh(xq)/q dq.
    """
    delta = min(0.5 * z, 0.5 / x, 0.5 * (cut - z)) if cut > z else 0.5 * z
    outside = [(0.0, z - delta)]
    if cut > z + delta:
        outside.append((z + delta, cut))
    value = 0.0
    err = 0.0
    for lo, hi in outside:
        v, e = quadrature.integrate(lambda p: np.exp(-x * p) / (p - z), _geometric(lo, hi, x, z), tol=tol * 1e-2)
        value += v
        err += e
    if cut > z:
        w, e = quadrature.integrate(lambda q: np.sinh(x * q) / q, [0.0, delta], tol=tol * 1e-2)
        value -= 2.0 * math.exp(-x * z) * w
        err += 2.0 * math.exp(-x * z) * e
    return value, err


def _geometric(lo: float, hi: float, x: float, z: float) -> list[float]:
    points = {lo, hi}
    step = 1.0 / x
    while lo + step < hi:
        points.add(lo + step)
        step *= 2.0
    # refine towards the excised pole, where 1/(p - z) varies fastest
    for side in (lo, hi):
        gap = abs(side - z)
        for k in range(1, 12):
            t = z + (gap * 2.0**k if side > z else -gap * 2.0**k)
            if lo < t < hi:
                points.add(t)
    return sorted(points)


def borel_sum(
    series: FormalPowerSeries,
    x: float,
    order: int = 12,
    method: str = "pade",
    tol: float = DEFAULT_TOL,
) -> Ball:
    """Numeric Borel sum of an x-plane series at ``x``: pade, pv or least-term."""
    if method == "least-term":
        value, _ = least_term_sum(series, 1.0, x)
        return Ball(float(value), abs(float(_least_term_gap(series, x))))
    model = pade_continue(borel_transform(series), order)
    if method == "pv":
        return pv_laplace(model, x, tol)
    if method == "pade":
        try:
            return laplace_quadrature(model, x, tol)
        except PoleOnPathError:
            return pv_laplace(model, x, tol)
    raise ValueError(f"unknown summation method {method!r}")


def _least_term_gap(series: FormalPowerSeries, x: float) -> Scalar:
    k = math.floor(x) + 1
    return series.coeff(k) * Fraction(x) ** (-k - 1)


# --------------------------------------------------------------------------
# Least-term summation


def least_term_sum(series: FormalPowerSeries, rho: float | Fraction, x) -> tuple[Scalar, int]:
    """Sum of c_k x^(-k-1) over k <= rho*x; returns (value, last index).

    Rational ``x`` and ``rho`` (floats are read exactly) give an exact sum.
    """
    if series.plane != "x":
        raise DomainError("least-term summation expects a series in 1/x")
    if isinstance(x, mpmath.mpf):
        x_exact = None
        kmax = int(mpmath.floor(mpmath.mpf(rho) * x))
    else:
        x_exact = Fraction(x)
        kmax = math.floor(Fraction(rho) * x_exact)
    if (x_exact if x_exact is not None else x) <= 1:
        raise DomainError("least-term summation needs x > 1")
    if x_exact is not None:
        inv = 1 / x_exact
        power = inv
        total: Scalar = Fraction(0)
        for k in range(kmax + 1):
            total = total + series.coeff(k) * power
            power *= inv
        return total, kmax
    total_m = mpmath.mpf(0)
    for k in range(kmax + 1):
        total_m += to_mpf(series.coeff(k)) / x ** (k + 1)
    return total_m, kmax


def least_term_error_constant(
    oracle: Callable[[object], object],
    series: FormalPowerSeries,
    b: float | Fraction,
    rho: float | Fraction,
    grid: Iterable,
    dps: int = 50,
) -> float:
    """sup over the grid of |oracle(x) - least-term sum| * e^(rho x) * x^(-b).

    The oracle is called with an mpmath number at ``dps`` digits.  A sup that
    keeps growing at the end of the grid is reported as not applicable.
    """
    points = list(grid)
    if not points:
        raise ValueError("empty grid")
    ratios = []
    with mpmath.workdps(dps):
        for x in points:
            exact, _ = least_term_sum(series, rho, Fraction(x) if not isinstance(x, mpmath.mpf) else x)
            xm = mpmath.mpf(Fraction(x).numerator) / Fraction(x).denominator
            gap = abs(_mp(oracle(xm)) - _mp(exact))
            ratios.append(gap * mpmath.exp(_mp(rho) * xm) * xm ** (-_mp(b)))
    best = max(ratios)
    if len(ratios) >= 4:
        mid = ratios[len(ratios) // 2]
        if ratios[-1] == best and best > 2 * mid and ratios[-1] > ratios[-2] > ratios[-3]:
            raise NotApplicableError("least-term error ratio grows along the grid")
    return float(best)


def _mp(value) -> mpmath.mpf:
    if isinstance(value, Fraction):
        return mpmath.mpf(value.numerator) / value.denominator
    if isinstance(value, mpmath.mpf):
        return value
    if isinstance(value, (int, float)):
        return mpmath.mpf(value)
    if isinstance(value, Ball):
        return _mp(value.mid)
    return to_mpf(value)


# --------------------------------------------------------------------------
# Borel-plane integration


def borel_plane_integrate(Y: FormalPowerSeries, a: Scalar, b: Scalar) -> FormalPowerSeries:
    """Borel-plane series G whose Laplace image is the decaying antiderivative part.

    G solves (a+p) G' = (b-1) G - Y' with G(0) = -Y(0)/a, computed termwise.
    """
    if Y.plane != "p":
        raise DomainError("Borel-plane integration expects a series in p")
    a = as_scalar(a)
    b = as_scalar(b)
    if a == 0:
        raise DomainError("singular kernel: a = 0")
    try:
        positive = to_float(a) > 0
    except Exception:  # pragma: no cover - symbolic sign failure
        positive = True
    if not positive:
        raise DomainError("Borel-plane integration needs a > 0")
    values: list[Scalar] = []
    lock = threading.Lock()

    def rule(k: int) -> Scalar:
        with lock:
            while len(values) <= k:
                n = len(values)
                if n == 0:
                    values.append(-Y.coeff(0) / a)
                else:
                    prev = values[n - 1]
                    values.append(((b - 1 - (n - 1)) * prev - n * Y.coeff(n)) / (a * n))
            return values[k]

    return FormalPowerSeries(rule, plane="p", name="borel-plane integral")


# Convenience constructors used across the package.


def factorial_series(alternating: bool = False) -> FormalPowerSeries:
    """sum k! x^(-k-1), or sum (-1)^k k! x^(-k-1) when ``alternating``."""
    if alternating:
        return FormalPowerSeries(lambda k: Fraction((-1) ** k * math.factorial(k)), plane="x", name="(-1)^k k!")
    return FormalPowerSeries(lambda k: Fraction(math.factorial(k)), plane="x", name="k!")
