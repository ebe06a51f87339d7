"""Coefficient field: exact rationals, a small symbolic extension, and error balls.

Three kinds of scalar appear as coefficients:

* ``Fraction`` -- the default, exact.
* ``Sym`` -- a finite rational combination of products
  ``e**a * pi**b * 2**c * ln(2*pi)**m * Ei1**n`` with rational ``a, b, c``
  (``0 <= c < 1``) and integer ``m, n >= 0``.  This is enough to keep
  Stirling's constant, ``e**r`` for rational ``r`` and the value ``Ei(1)`` exact.
  Signs are decided numerically at high precision and raise
  ``UndecidableSignError`` when the value is indistinguishable from zero.
* ``Ball`` -- a float midpoint with a radius, used for float mode and for
  numerical constants that have no exact form.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

import mpmath

from .errors import DomainError, RepresentationError, UndecidableSignError

_F0 = Fraction(0)
_F1 = Fraction(1)

# exponent tuple: (e, pi, two, ln2pi, ei1)
ConstMono = tuple
_ID: ConstMono = (_F0, _F0, _F0, 0, 0)
_NAMES = ("e", "pi", "2", "ln(2*pi)", "Ei1")
_SIGN_DPS = 60


def _norm_mono(mono: ConstMono) -> tuple[Fraction, ConstMono]:
    """Move the integer part of the power of two into a rational factor."""
    two = mono[2]
    whole = math.floor(two)
    if whole == 0:
        return _F1, mono
    return Fraction(2) ** whole, (mono[0], mono[1], two - whole, mono[3], mono[4])


def _mono_mul(a: ConstMono, b: ConstMono) -> tuple[Fraction, ConstMono]:
    return _norm_mono((a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3], a[4] + b[4]))


def _mono_value(mono: ConstMono) -> mpmath.mpf:
    val = mpmath.mpf(1)
    if mono[0]:
        val *= mpmath.exp(mpmath.mpf(mono[0].numerator) / mono[0].denominator)
    if mono[1]:
        val *= mpmath.power(mpmath.pi, mpmath.mpf(mono[1].numerator) / mono[1].denominator)
    if mono[2]:
        val *= mpmath.power(2, mpmath.mpf(mono[2].numerator) / mono[2].denominator)
    if mono[3]:
        val *= mpmath.log(2 * mpmath.pi) ** mono[3]
    if mono[4]:
        val *= mpmath.ei(1) ** mono[4]
    return val


def _mpf_of_fraction(q: Fraction) -> mpmath.mpf:
    return mpmath.mpf(q.numerator) / q.denominator


class Sym:
    """Exact linear combination of registered constant monomials."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: tuple[tuple[ConstMono, Fraction], ...]) -> None:
        self.terms = terms
        self._hash = hash(terms)

    # construction -------------------------------------------------------
    @staticmethod
    def constant(name: str, power: Fraction | int = 1) -> "Scalar":
        idx = {"e": 0, "pi": 1, "two": 2, "ln2pi": 3, "Ei1": 4}[name]
        power = Fraction(power)
        if idx >= 3 and (power.denominator != 1 or power < 0):
            raise RepresentationError(f"{name} only admits nonnegative integer powers")
        exps = list(_ID)
        exps[idx] = power if idx < 3 else int(power)
        factor, mono = _norm_mono(tuple(exps))
        return make_sym({mono: factor})

    def as_dict(self) -> dict[ConstMono, Fraction]:
        return dict(self.terms)

    # arithmetic -----------------------------------------------------------
    def __add__(self, other: object) -> "Scalar":
        if isinstance(other, Ball):
            return other + self
        o = _sym_dict(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for m, c in o.items():
            out[m] = out.get(m, _F0) + c
        return make_sym(out)

    __radd__ = __add__

    def __neg__(self) -> "Sym":
        return Sym(tuple((m, -c) for m, c in self.terms))

    def __pos__(self) -> "Sym":
        return self

    def __sub__(self, other: object) -> "Scalar":
        if isinstance(other, (int, Fraction, Sym, Ball)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other: object) -> "Scalar":
        return (-self) + other

    def __mul__(self, other: object) -> "Scalar":
        if isinstance(other, Ball):
            return other * self
        o = _sym_dict(other)
        if o is None:
            return NotImplemented
        out: dict[ConstMono, Fraction] = {}
        for m1, c1 in self.terms:
            for m2, c2 in o.items():
                f, m = _mono_mul(m1, m2)
                out[m] = out.get(m, _F0) + c1 * c2 * f
        return make_sym(out)

    __rmul__ = __mul__

    def _inverse(self) -> "Scalar":
        if len(self.terms) != 1:
            raise RepresentationError("division by a sum of transcendental constants")
        mono, c = self.terms[0]
        if mono[3] or mono[4]:
            raise RepresentationError("division by a power of ln(2*pi) or Ei1")
        factor, inv = _norm_mono((-mono[0], -mono[1], -mono[2], 0, 0))
        return make_sym({inv: factor / c})

    def __truediv__(self, other: object) -> "Scalar":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return self * (_F1 / other)
        if isinstance(other, Sym):
            return self * other._inverse()
        if isinstance(other, Ball):
            return Ball.of(self) / other
        return NotImplemented

    def __rtruediv__(self, other: object) -> "Scalar":
        if isinstance(other, (int, Fraction)):
            return self._inverse() * other
        return NotImplemented

    def __pow__(self, n: int) -> "Scalar":
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self._inverse() ** (-n)
        out: Scalar = _F1
        for _ in range(n):
            out = out * self
        return out

    # comparison ----------------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if isinstance(other, Sym):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return False
        return NotImplemented

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: object) -> bool:
        return sign(self - other) < 0

    def __le__(self, other: object) -> bool:
        return self == other or sign(self - other) < 0

    def __gt__(self, other: object) -> bool:
        return sign(self - other) > 0

    def __ge__(self, other: object) -> bool:
        return self == other or sign(self - other) > 0

    def __bool__(self) -> bool:
        return True

    def to_mpf(self) -> mpmath.mpf:
        return mpmath.fsum(_mono_value(m) * _mpf_of_fraction(c) for m, c in self.terms)

    def __float__(self) -> float:
        with mpmath.workdps(30):
            return float(self.to_mpf())

    def __repr__(self) -> str:
        return f"Sym({format_scalar(self)})"


def _sym_dict(value: object) -> dict[ConstMono, Fraction] | None:
    if isinstance(value, Sym):
        return dict(value.terms)
    if isinstance(value, (int, Fraction)):
        return {_ID: Fraction(value)} if value else {}
    return None


def make_sym(terms: dict[ConstMono, Fraction]) -> "Scalar":
    """Normalise a dict of constant monomials, collapsing to Fraction when possible."""
    items = tuple(sorted(((m, Fraction(c)) for m, c in terms.items() if c), key=lambda t: t[0]))
    if not items:
        return _F0
    if len(items) == 1 and items[0][0] == _ID:
        return items[0][1]
    return Sym(items)


class Ball:
    """Float midpoint with an absolute error radius."""

    __slots__ = ("mid", "rad")

    def __init__(self, mid: float, rad: float = 0.0) -> None:
        self.mid = float(mid)
        self.rad = abs(float(rad))

    @staticmethod
    def of(value: "Scalar | float") -> "Ball":
        if isinstance(value, Ball):
            return value
        if isinstance(value, float):
            return Ball(value, 0.0)
        if isinstance(value, Sym):
            with mpmath.workdps(30):
                return Ball(float(value.to_mpf()), 0.0)
        mid = float(value)
        return Ball(mid, _ulp(mid) if Fraction(mid) != value else 0.0)

    def __add__(self, other: object) -> "Ball":
        o = _ball(other)
        if o is None:
            return NotImplemented
        mid = self.mid + o.mid
        return Ball(mid, self.rad + o.rad + _ulp(mid))

    __radd__ = __add__

    def __neg__(self) -> "Ball":
        return Ball(-self.mid, self.rad)

    def __sub__(self, other: object) -> "Ball":
        o = _ball(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: object) -> "Ball":
        return (-self) + other

    def __mul__(self, other: object) -> "Ball":
        o = _ball(other)
        if o is None:
            return NotImplemented
        mid = self.mid * o.mid
        rad = abs(self.mid) * o.rad + abs(o.mid) * self.rad + self.rad * o.rad
        return Ball(mid, rad + _ulp(mid))

    __rmul__ = __mul__

    def __truediv__(self, other: object) -> "Ball":
        o = _ball(other)
        if o is None:
            return NotImplemented
        if abs(o.mid) <= o.rad:
            raise ZeroDivisionError("division by a ball containing zero")
        lo = abs(o.mid) - o.rad
        mid = self.mid / o.mid
        rad = (self.rad + abs(mid) * o.rad) / lo
        return Ball(mid, rad + _ulp(mid))

    def __rtruediv__(self, other: object) -> "Ball":
        o = _ball(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, n: int) -> "Ball":
        out = Ball(1.0)
        base = self if n >= 0 else Ball(1.0) / self
        for _ in range(abs(n)):
            out = out * base
        return out

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Ball):
            return self.mid == other.mid and self.rad == other.rad
        return False

    def __hash__(self) -> int:
        return hash((self.mid, self.rad))

    def __bool__(self) -> bool:
        return self.mid != 0.0 or self.rad != 0.0

    def __float__(self) -> float:
        return self.mid

    def contains(self, value: float) -> bool:
        return abs(value - self.mid) <= self.rad

    def __repr__(self) -> str:
        return f"Ball({self.mid!r}, {self.rad!r})"


def _ulp(x: float) -> float:
    return math.ulp(x) if math.isfinite(x) else 0.0


def _ball(value: object) -> Ball | None:
    if isinstance(value, Ball):
        return value
    if isinstance(value, (int, Fraction, Sym, float)):
        return Ball.of(value if not isinstance(value, int) else Fraction(value))
    return None


Scalar = Union[Fraction, Sym, Ball]


# helpers ---------------------------------------------------------------------

def as_scalar(value: object) -> Scalar:
    """Coerce ints, floats and strings into a scalar."""
    if isinstance(value, (Fraction, Sym, Ball)):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Ball(value, 0.0)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, complex):
        raise DomainError("complex scalars are not supported")
    raise TypeError(f"cannot interpret {value!r} as a scalar")


def is_zero(value: Scalar) -> bool:
    if isinstance(value, Ball):
        return value.mid == 0.0 and value.rad == 0.0
    return not isinstance(value, Sym) and value == 0


def sign(value: Scalar) -> int:
    """Sign of a scalar; raises UndecidableSignError when it cannot be certified."""
    if isinstance(value, (int, Fraction)):
        return (value > 0) - (value < 0)
    if isinstance(value, Ball):
        if value.mid - value.rad > 0:
            return 1
        if value.mid + value.rad < 0:
            return -1
        if value.mid == 0.0 and value.rad == 0.0:
            return 0
        raise UndecidableSignError(f"ball {value!r} straddles zero")
    with mpmath.workdps(_SIGN_DPS):
        parts = [_mono_value(m) * _mpf_of_fraction(c) for m, c in value.terms]
        total = mpmath.fsum(parts)
        scale = mpmath.fsum(abs(p) for p in parts)
        if abs(total) <= scale * mpmath.mpf(10) ** (-(_SIGN_DPS - 10)):
            raise UndecidableSignError(f"cannot certify the sign of {format_scalar(value)}")
        return 1 if total > 0 else -1


def to_mpf(value: Scalar) -> mpmath.mpf:
    if isinstance(value, Fraction):
        return _mpf_of_fraction(value)
    if isinstance(value, int):
        return mpmath.mpf(value)
    if isinstance(value, Ball):
        return mpmath.mpf(value.mid)
    if isinstance(value, (float, mpmath.mpf)):
        return mpmath.mpf(value)
    return value.to_mpf()


def to_float(value: Scalar) -> float:
    return float(value)


def _int_root(n: int, k: int) -> int | None:
    if n < 0:
        return None
    if n in (0, 1):
        return n
    r = round(n ** (1.0 / k)) if n < 2**1000 else int(mpmath.floor(mpmath.root(n, k)))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == n:
            return cand
    return None


def _two_adic(n: int) -> tuple[int, int]:
    j = 0
    while n % 2 == 0:
        n //= 2
        j += 1
    return j, n


def scalar_pow(value: Scalar, exponent: Fraction | int) -> Scalar:
    """``value ** exponent`` for a rational exponent, exact whenever representable."""
    q = Fraction(exponent)
    if isinstance(value, Ball):
        if value.mid <= 0 and q.denominator != 1:
            raise DomainError("fractional power of a nonpositive ball")
        return Ball(value.mid ** float(q), abs(q) * value.rad * abs(value.mid) ** (float(q) - 1) + _ulp(value.mid ** float(q)))
    if q.denominator == 1:
        if is_zero(value) and q < 0:
            raise ZeroDivisionError("zero to a negative power")
        return value ** int(q)
    if isinstance(value, Sym):
        if len(value.terms) != 1:
            raise RepresentationError("fractional power of a sum of constants")
        mono, c = value.terms[0]
        if (mono[3] * q).denominator != 1 or (mono[4] * q).denominator != 1:
            raise RepresentationError("fractional power of ln(2*pi) or Ei1")
        head = scalar_pow(c, q)
        factor, m = _norm_mono((mono[0] * q, mono[1] * q, mono[2] * q, int(mono[3] * q), int(mono[4] * q)))
        return head * make_sym({m: factor})
    value = Fraction(value)
    if value < 0:
        raise DomainError("fractional power of a negative number")
    if value == 0:
        return _F0
    num_root = _int_root(value.numerator, q.denominator)
    den_root = _int_root(value.denominator, q.denominator)
    if num_root is not None and den_root is not None:
        return Fraction(num_root, den_root) ** q.numerator
    jn, on = _two_adic(value.numerator)
    jd, od = _two_adic(value.denominator)
    on_root, od_root = _int_root(on, q.denominator), _int_root(od, q.denominator)
    if on_root is None or od_root is None:
        raise RepresentationError(f"{value}^{q} is not representable exactly")
    odd_part = Fraction(on_root, od_root) ** q.numerator
    return odd_part * Sym.constant("two", (jn - jd) * q)


def scalar_exp(value: Scalar) -> Scalar:
    """``exp(value)``; exact for rationals plus rational multiples of ln(2*pi)."""
    if isinstance(value, Ball):
        mid = math.exp(value.mid)
        return Ball(mid, mid * (math.expm1(value.rad)) + _ulp(mid))
    if isinstance(value, (int, Fraction)):
        return _F1 if value == 0 else Sym.constant("e", value)
    rational = _F0
    log_coeff = _F0
    ln2pi_mono = (_F0, _F0, _F0, 1, 0)
    for mono, c in value.terms:
        if mono == _ID:
            rational = c
        elif mono == ln2pi_mono:
            log_coeff = c
        else:
            raise RepresentationError(f"exp({format_scalar(value)}) is not representable exactly")
    out = scalar_exp(rational)
    if log_coeff:
        out = out * Sym.constant("pi", log_coeff) * Sym.constant("two", log_coeff)
    return out


def scalar_ln(value: Scalar) -> Scalar:
    """``ln(value)`` for positive scalars of the form e**a * (2*pi)**b."""
    if isinstance(value, Ball):
        if value.mid - value.rad <= 0:
            raise DomainError("logarithm of a ball that is not positive")
        mid = math.log(value.mid)
        return Ball(mid, value.rad / (value.mid - value.rad) + _ulp(mid))
    if sign(value) <= 0:
        raise DomainError("logarithm of a nonpositive scalar")
    if isinstance(value, (int, Fraction)):
        if value == 1:
            return _F0
        raise RepresentationError(f"ln({value}) is not representable exactly")
    if len(value.terms) != 1:
        raise RepresentationError("logarithm of a sum of constants")
    mono, c = value.terms[0]
    if mono[3] or mono[4]:
        raise RepresentationError("logarithm of a power of ln(2*pi) or Ei1")
    c = Fraction(c)
    j = 0
    if c != 1:
        jn, on = _two_adic(c.numerator)
        jd, od = _two_adic(c.denominator)
        if on != 1 or od != 1:
            raise RepresentationError(f"ln of {format_scalar(value)} is not representable exactly")
        j = jn - jd
    if mono[2] + j != mono[1]:
        raise RepresentationError(f"ln of {format_scalar(value)} is not representable exactly")
    out: Scalar = mono[0]
    if mono[1]:
        out = out + mono[1] * Sym.constant("ln2pi")
    return out


# formatting ------------------------------------------------------------------

def _fmt_q(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _fmt_power(name: str, p: Fraction | int) -> str:
    p = Fraction(p)
    if p == 1:
        return name
    if p.denominator == 1 and p > 0:
        return f"{name}^{p.numerator}"
    return f"{name}^({_fmt_q(p)})"


def _fmt_mono(mono: ConstMono) -> str:
    parts = [_fmt_power(_NAMES[i], mono[i]) for i in range(5) if mono[i]]
    return "*".join(parts)


def format_scalar(value: Scalar, *, digits: int = 17) -> str:
    """Render a scalar in the text syntax (parseable back for exact kinds)."""
    if isinstance(value, int):
        value = Fraction(value)
    if isinstance(value, Fraction):
        return _fmt_q(value)
    if isinstance(value, Ball):
        return f"{value.mid:.{digits}g} +/- {value.rad:.2g}"
    out: list[str] = []
    for mono, c in value.terms:
        body = _fmt_mono(mono)
        mag = abs(c)
        if mono == _ID:
            piece = _fmt_q(mag)
        elif mag == 1:
            piece = body
        else:
            piece = f"{_fmt_q(mag)}*{body}"
        if not out:
            out.append(piece if c > 0 else f"-{piece}")
        else:
            out.append(f" + {piece}" if c > 0 else f" - {piece}")
    return "".join(out)


def needs_parens(value: Scalar) -> bool:
    """True if the rendering is a sum and needs parentheses inside a product."""
    return isinstance(value, Sym) and len(value.terms) > 1 or isinstance(value, Ball)


E = Sym.constant("e")
PI = Sym.constant("pi")
LN2PI = Sym.constant("ln2pi")
EI1 = Sym.constant("Ei1")
