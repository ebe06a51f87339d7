"""Conway normal forms with exact coefficients, plus lazy term streams.

A monomial is ``e**E * w**y`` where ``y`` is a normal form and ``E`` is a
purely infinite normal form (zero for plain powers of omega).  Exponentials of
purely infinite numbers stay atomic; only the part ``q*ln(w)`` with rational
``q`` is folded back into ``w**q``.  Here ``ln(w)`` is the normal form
``w**(w**-1)``, written ``LOG_OMEGA`` below.

Monomials with equal exponential parts compare by their powers.  Otherwise
the comparison goes through logarithms, which requires the powers to differ by
a rational number; other comparisons raise ``UnsupportedFragmentError``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Sequence

from . import config
from .errors import DepthCapError, DomainError, UnsupportedFragmentError
from .hahn import (
    LazySeries,
    Terms,
    _Rev,
    merge_candidates,
    monoid_candidates,
    mul_terms,
    stabilised_limit,
    CandidateList,
)
from .scalar import Ball, Scalar, Sym, as_scalar, is_zero, scalar_exp, scalar_ln, sign

_F0 = Fraction(0)
_F1 = Fraction(1)

# exponents are interned so that monomials can be interned by identity
_NF_TABLE: dict = {}
_MONO_TABLE: dict = {}


class SurrealNF:
    """Finite Conway normal form: terms ``(Mono, coeff)`` in decreasing order."""

    __slots__ = ("terms", "depth", "pure", "_key", "_hash", "__weakref__")

    def __init__(self, terms: tuple = (), _depth: int | None = None) -> None:
        pure = True
        if _depth is None:
            _depth = 0
            for m, _ in terms:
                if not m.is_one and m.depth >= _depth:
                    _depth = 1 + m.depth
                if not m.pure:
                    pure = False
            # every cap is at least 1, so shallow forms skip the environment lookup
            if _depth > 1 and _depth > config.depth_cap():
                raise DepthCapError(
                    f"normal form nesting depth {_depth} exceeds the cap {config.depth_cap()}",
                    cap_name="CONWAY_DEPTH_CAP",
                    cap_value=config.depth_cap(),
                )
        else:
            pure = all(m.pure for m, _ in terms)
        self.terms = terms
        self.depth = _depth
        self.pure = pure
        self._key = None
        self._hash = None

    def order_key(self) -> tuple:
        """Tuple whose lexicographic order is the numeric order (pure powers of w only)."""
        k = self._key
        if k is None:
            parts = []
            for m, c in self.terms:
                if type(c) is not Fraction:
                    raise TypeError("order keys need rational coefficients")
                # the float is monotone in c, so it settles most ties in C
                num, den = c.numerator, c.denominator
                if num > 0:
                    parts.append((1, m.power.order_key(), num / den, c))
                else:
                    parts.append((-1, nf_neg(m.power).order_key(), num / den, c))
            parts.append((0,))
            k = self._key = tuple(parts)
        return k

    def _keyable(self) -> bool:
        return self.pure and all(type(c) is Fraction for _, c in self.terms)

    # basic protocol -----------------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if isinstance(other, SurrealNF):
            return self._cheap_key() == other._cheap_key()
        if isinstance(other, (int, Fraction)):
            return self == nf_const(other)
        return NotImplemented

    def _cheap_key(self) -> tuple:
        k = self._hash
        if k is None:
            k = self._hash = tuple(
                [(id(m), c.numerator, c.denominator) if type(c) is Fraction else (id(m), c) for m, c in self.terms]
            )
        return k

    def __hash__(self) -> int:
        return hash(self._cheap_key())

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple["Mono", Scalar]]:
        return iter(self.terms)

    def __lt__(self, other: "SurrealNF") -> bool:
        return nf_cmp(self, _nf(other)) < 0

    def __le__(self, other: "SurrealNF") -> bool:
        return nf_cmp(self, _nf(other)) <= 0

    def __gt__(self, other: "SurrealNF") -> bool:
        return nf_cmp(self, _nf(other)) > 0

    def __ge__(self, other: "SurrealNF") -> bool:
        return nf_cmp(self, _nf(other)) >= 0

    def __add__(self, other: object):
        if isinstance(other, TermStream):
            return TermStream.from_nf(self) + other
        o = _maybe_nf(other)
        return NotImplemented if o is None else nf_add(self, o)

    __radd__ = __add__

    def __neg__(self) -> "SurrealNF":
        return nf_neg(self)

    def __sub__(self, other: object):
        if isinstance(other, TermStream):
            return TermStream.from_nf(self) - other
        o = _maybe_nf(other)
        return NotImplemented if o is None else nf_add(self, nf_neg(o))

    def __rsub__(self, other: object):
        o = _maybe_nf(other)
        return NotImplemented if o is None else nf_add(o, nf_neg(self))

    def __mul__(self, other: object):
        if isinstance(other, TermStream):
            return TermStream.from_nf(self) * other
        if isinstance(other, (Sym, Ball)):
            return nf_scale(self, other)
        o = _maybe_nf(other)
        return NotImplemented if o is None else nf_mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, other: object):
        if isinstance(other, (int, Fraction, Sym, Ball)) and not isinstance(other, bool):
            return nf_scale(self, 1 / as_scalar(other))
        o = _maybe_nf(other)
        if o is None:
            if isinstance(other, TermStream):
                return TermStream.from_nf(self) * other.inverse()
            return NotImplemented
        if len(o.terms) == 1:
            m, c = o.terms[0]
            return nf_scale(nf_mul(self, SurrealNF(((m.inv(), _F1),))), 1 / c)
        return TermStream.from_nf(self) * nf_inverse(o)

    def leading(self) -> tuple["Mono", Scalar]:
        if not self.terms:
            raise ValueError("zero has no leading term")
        return self.terms[0]

    def coefficient(self, mono: "Mono") -> Scalar:
        for m, c in self.terms:
            if m == mono:
                return c
        return _F0

    def is_real(self) -> bool:
        return all(m.is_one for m, _ in self.terms)

    def real_value(self) -> Scalar | None:
        """The scalar if this normal form is real, else None."""
        if not self.terms:
            return _F0
        if len(self.terms) == 1 and self.terms[0][0].is_one:
            return self.terms[0][1]
        return None

    def stream(self) -> "TermStream":
        return TermStream.from_nf(self)

    def __str__(self) -> str:
        from .syntax import render_value

        return render_value(self)

    def __repr__(self) -> str:
        return f"SurrealNF({self})"


class Mono:
    """The monomial ``e**expo * w**power`` (interned)."""

    __slots__ = ("power", "expo", "depth", "is_one", "pure", "__weakref__")

    power: SurrealNF
    expo: SurrealNF

    def __new__(cls, power: SurrealNF, expo: SurrealNF) -> "Mono":
        power = _NF_TABLE.setdefault(power._cheap_key(), power)
        expo = _NF_TABLE.setdefault(expo._cheap_key(), expo)
        key = (id(power), id(expo))
        found = _MONO_TABLE.get(key)
        if found is not None:
            return found
        obj = object.__new__(cls)
        obj.power = power
        obj.expo = expo
        obj.depth = max(power.depth, expo.depth)
        obj.is_one = not power.terms and not expo.terms
        obj.pure = not expo.terms and power.pure and all(type(c) is Fraction for _, c in power.terms)
        return _MONO_TABLE.setdefault(key, obj)

    def __reduce__(self):
        return (Mono, (self.power, self.expo))

    # identity equality and hashing are inherited from object (monomials are interned)

    def __mul__(self, other: "Mono") -> "Mono":
        return _mono_mul(self, other)

    def __truediv__(self, other: "Mono") -> "Mono":
        return _mono_mul(self, other.inv())

    def inv(self) -> "Mono":
        return _mono_inv(self)

    def __pow__(self, q: Fraction | int) -> "Mono":
        q = Fraction(q)
        return Mono(nf_scale(self.power, q), nf_scale(self.expo, q))

    def __lt__(self, other: "Mono") -> bool:
        return mono_cmp(self, other) < 0

    def __gt__(self, other: "Mono") -> bool:
        return mono_cmp(self, other) > 0

    def __le__(self, other: "Mono") -> bool:
        return mono_cmp(self, other) <= 0

    def __ge__(self, other: "Mono") -> bool:
        return mono_cmp(self, other) >= 0

    def __repr__(self) -> str:
        from .syntax import render_mono

        return f"Mono({render_mono(self)})"


ZERO = SurrealNF(())
ONE_MONO = Mono(ZERO, ZERO)


def nf_const(value: Scalar | int) -> SurrealNF:
    c = as_scalar(value)
    return ZERO if is_zero(c) else SurrealNF(((ONE_MONO, c),), 0)


ONE = nf_const(1)


def _maybe_nf(value: object) -> SurrealNF | None:
    if isinstance(value, SurrealNF):
        return value
    if isinstance(value, (int, Fraction, Sym, Ball)) and not isinstance(value, bool):
        return nf_const(value)
    return None


def _nf(value: object) -> SurrealNF:
    out = _maybe_nf(value)
    if out is None:
        raise TypeError(f"expected a normal form, got {value!r}")
    return out


@lru_cache(maxsize=1 << 17)
def _mono_mul(a: Mono, b: Mono) -> Mono:
    if a.is_one:
        return b
    if b.is_one:
        return a
    return Mono(nf_add(a.power, b.power), nf_add(a.expo, b.expo))


@lru_cache(maxsize=1 << 14)
def _mono_inv(a: Mono) -> Mono:
    return Mono(nf_neg(a.power), nf_neg(a.expo))


def omega_pow(y: SurrealNF | Scalar | int) -> SurrealNF:
    """Single-term normal form ``w**y``."""
    return SurrealNF(((Mono(_nf(y), ZERO), _F1),))


def mono_of(power: SurrealNF | Scalar | int = 0, expo: SurrealNF | None = None) -> Mono:
    return Mono(_nf(power), ZERO if expo is None else expo)


def rational_value(x: SurrealNF) -> Fraction | None:
    v = x.real_value()
    return v if isinstance(v, Fraction) else None


OMEGA = omega_pow(1)
LOG_OMEGA = omega_pow(omega_pow(-1))
LOG_OMEGA_MONO = LOG_OMEGA.terms[0][0]


@lru_cache(maxsize=1 << 17)
def mono_cmp(a: Mono, b: Mono) -> int:
    """Order of monomials: 1 if ``a`` dominates, -1 if ``b`` does, 0 if equal."""
    if a is b:
        return 0
    if a.pure and b.pure:
        ka, kb = a.power.order_key(), b.power.order_key()
        return (ka > kb) - (ka < kb)
    if a.expo is b.expo:
        return nf_cmp(a.power, b.power)
    d = nf_add(a.power, nf_neg(b.power))
    q = rational_value(d)
    if q is None:
        key = nf_add(a.expo, nf_neg(b.expo))
        if not key.terms:
            return nf_sign(d)
        # for finite d, ln(w^d) is at most of the size of ln(w)
        d_finite = not d.terms or not d.terms[0][0] > ONE_MONO
        if d_finite and key.terms[0][0] > LOG_OMEGA_MONO:
            return nf_sign(key)
        raise UnsupportedFragmentError(
            "comparing exponential monomials whose powers of w differ by a non-rational amount"
        )
    key = nf_add(a.expo, nf_neg(b.expo))
    if q:
        key = nf_add(key, nf_scale(LOG_OMEGA, q))
    return nf_sign(key)


def nf_sign(a: SurrealNF) -> int:
    return sign(a.terms[0][1]) if a.terms else 0


def nf_cmp(a: SurrealNF, b: SurrealNF) -> int:
    """Total order: -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    if a is b:
        return 0
    if a.pure and b.pure and a._keyable() and b._keyable():
        ka, kb = a.order_key(), b.order_key()
        return (ka > kb) - (ka < kb)
    ta, tb = a.terms, b.terms
    for (ma, ca), (mb, cb) in zip(ta, tb):
        c = 0 if ma is mb else mono_cmp(ma, mb)
        if c == 0:
            if ca == cb:
                continue
            return sign(ca - cb)
        return sign(ca) if c > 0 else -sign(cb)
    if len(ta) > len(tb):
        return sign(ta[len(tb)][1])
    if len(tb) > len(ta):
        return -sign(tb[len(ta)][1])
    return 0


def nf_add(a: SurrealNF, b: SurrealNF) -> SurrealNF:
    if not a.terms:
        return b
    if not b.terms:
        return a
    ta, tb = a.terms, b.terms
    i = j = 0
    out = []
    while i < len(ta) and j < len(tb):
        ma, ca = ta[i]
        mb, cb = tb[j]
        c = 0 if ma is mb else mono_cmp(ma, mb)
        if c == 0:
            s = ca + cb
            if s:
                out.append((ma, s))
            i += 1
            j += 1
        elif c > 0:
            out.append(ta[i])
            i += 1
        else:
            out.append(tb[j])
            j += 1
    out.extend(ta[i:])
    out.extend(tb[j:])
    terms = tuple(out)
    return SurrealNF(terms, max(a.depth, b.depth) if terms else 0)


@lru_cache(maxsize=1 << 15)
def nf_neg(a: SurrealNF) -> SurrealNF:
    return SurrealNF(tuple((m, -c) for m, c in a.terms), a.depth)


def nf_sub(a: SurrealNF, b: SurrealNF) -> SurrealNF:
    return nf_add(a, nf_neg(b))


def nf_scale(a: SurrealNF, c: Scalar | int) -> SurrealNF:
    c = as_scalar(c)
    if is_zero(c):
        return ZERO
    if c == 1:
        return a
    return SurrealNF(tuple((m, v * c) for m, v in a.terms), a.depth)


def _sort_items(items: list) -> None:
    if all(m.pure for m, _ in items):
        items.sort(key=lambda t: t[0].power.order_key(), reverse=True)
    else:
        items.sort(key=lambda t: _Rev(t[0]))


def nf_from_terms(terms: Terms) -> SurrealNF:
    items = [(m, c) for m, c in terms.items() if c]
    _sort_items(items)
    return SurrealNF(tuple(items))


def nf_mul(a: SurrealNF, b: SurrealNF) -> SurrealNF:
    if not a.terms or not b.terms:
        return ZERO
    if len(b.terms) == 1 and b.terms[0][0].is_one:
        return nf_scale(a, b.terms[0][1])
    if len(a.terms) == 1 and a.terms[0][0].is_one:
        return nf_scale(b, a.terms[0][1])
    out: dict[Mono, Scalar] = {}
    get = out.get
    for ma, ca in a.terms:
        for mb, cb in b.terms:
            m = _mono_mul(ma, mb)
            v = get(m)
            out[m] = ca * cb if v is None else v + ca * cb
    items = [(m, c) for m, c in out.items() if c]
    _sort_items(items)
    return SurrealNF(tuple(items))


def decompose(x: "SurrealNF | TermStream") -> tuple[SurrealNF, Scalar, "SurrealNF | TermStream"]:
    """Split into purely infinite part, real part and infinitesimal part."""
    if isinstance(x, TermStream):
        head = x.truncate(ONE_MONO)
        re = head.pop(ONE_MONO, _F0)
        inf_part = nf_from_terms(head)
        small = x._drop_at_least(ONE_MONO)
        if small.is_finite:
            small = nf_from_terms(small.finite_terms())
        return inf_part, re, small
    big, small = [], []
    re: Scalar = _F0
    for m, c in x.terms:
        if m.is_one:
            re = c
        elif mono_cmp(m, ONE_MONO) > 0:
            big.append((m, c))
        else:
            small.append((m, c))
    return SurrealNF(tuple(big)), re, SurrealNF(tuple(small))


def is_infinitesimal(x: "SurrealNF | TermStream") -> bool:
    if isinstance(x, TermStream):
        return not x.truncate(ONE_MONO)
    return not x.terms or mono_cmp(x.terms[0][0], ONE_MONO) < 0


def is_purely_infinite(x: SurrealNF) -> bool:
    return all(mono_cmp(m, ONE_MONO) > 0 for m, _ in x.terms)


class TermStream(LazySeries):
    """Lazy surreal series with grid-based support."""

    ONE = ONE_MONO
    __slots__ = ()

    @classmethod
    def from_nf(cls, x: SurrealNF) -> "TermStream":
        return cls(None, None, finite=dict(x.terms))

    def _coerce(self, other: object):
        if isinstance(other, TermStream):
            return other
        if isinstance(other, SurrealNF):
            return TermStream.from_nf(other)
        return None

    def to_nf(self) -> SurrealNF:
        """Exact normal form; only for streams known to be finite."""
        if not self.is_finite:
            raise ValueError("stream is not known to be finite; use truncate()")
        return nf_from_terms(self.finite_terms())

    def truncate_nf(self, bound: Mono) -> SurrealNF:
        return nf_from_terms(self.truncate(bound))

    def level_bound(self, level: int) -> Mono | None:
        """Monomial bounding grid level ``level`` of the support certificate."""
        cert = self.certificate
        if cert is None:
            return None
        top = _max_mono(cert.seeds)
        if not cert.gens:
            return _min_mono(cert.seeds)
        return top * (_max_mono(cert.gens) ** level)

    def __str__(self) -> str:
        from .syntax import render_value

        return render_value(self)

    def __repr__(self) -> str:
        return f"TermStream({self})"


def _max_mono(ms: Sequence[Mono]) -> Mono:
    best = ms[0]
    for m in ms[1:]:
        if mono_cmp(m, best) > 0:
            best = m
    return best


def _min_mono(ms: Sequence[Mono]) -> Mono:
    best = ms[0]
    for m in ms[1:]:
        if mono_cmp(m, best) < 0:
            best = m
    return best


def as_stream(x: "SurrealNF | TermStream | Scalar | int") -> TermStream:
    if isinstance(x, TermStream):
        return x
    return TermStream.from_nf(_nf(x))


def nf_inverse(a: "SurrealNF | TermStream", order: int | None = None) -> TermStream:
    """Reciprocal as a stream: ``1/(r w**y (1+h)) = w**-y / r * sum (-h)**k``.

    ``order`` is accepted for interface symmetry; use ``stream.take(order)`` or
    ``stream.truncate(stream.level_bound(order))`` to force terms.
    """
    if isinstance(a, SurrealNF) and not a.terms:
        raise ZeroDivisionError("nf_inverse of zero")
    if order is not None and order < 0:
        raise ValueError("order must be nonnegative")
    return as_stream(a).inverse()


def _coeff_fn(coeffs: Callable[[int], Scalar] | Sequence[Scalar]) -> tuple[Callable[[int], Scalar], int | None]:
    if callable(coeffs):
        cache: dict[int, Scalar] = {}

        def fn(k: int) -> Scalar:
            v = cache.get(k)
            if v is None:
                v = as_scalar(coeffs(k))
                cache[k] = v
            return v

        return fn, None
    seq = [as_scalar(c) for c in coeffs]
    return (lambda k: seq[k] if k < len(seq) else _F0), len(seq) - 1


def eval_series_at_infinitesimal(coeffs: Callable[[int], Scalar] | Sequence[Scalar], eps: "SurrealNF | TermStream") -> TermStream:
    """``sum_k c_k eps**k`` for infinitesimal ``eps`` as an exact lazy stream."""
    if not is_infinitesimal(eps):
        raise DomainError("eval_series_at_infinitesimal needs an infinitesimal argument")
    fn, order = _coeff_fn(coeffs)
    return as_stream(eps).compose(fn, finite_order=order)


def eval_multiseries(coeffs: Callable[[tuple[int, ...]], Scalar], eps: Sequence["SurrealNF | TermStream"]) -> TermStream:
    """``sum_k c_k prod_i eps_i**k_i`` over multi-indices, all ``eps_i`` infinitesimal."""
    streams = [as_stream(e) for e in eps]
    for e in streams:
        if not is_infinitesimal(e):
            raise DomainError("every argument of eval_multiseries must be infinitesimal")
    if not streams:
        return as_stream(coeffs(()))
    bounds = [s.upper_bound() for s in streams]
    cache: dict[tuple[int, ...], Scalar] = {}

    def coeff(k: tuple[int, ...]) -> Scalar:
        if k not in cache:
            cache[k] = as_scalar(coeffs(k))
        return cache[k]

    cap = config.term_cap()

    def trunc(bound: Mono) -> Terms:
        smalls = [s.truncate(bound) for s in streams]
        total: Terms = {}

        def rec(i: int, prefix: tuple[int, ...], acc: Terms, level: Mono) -> None:
            if i == len(streams):
                c = coeff(prefix)
                if not is_zero(c):
                    for m, v in acc.items():
                        total[m] = total.get(m, _F0) + v * c
                return
            power, lvl, k = acc, level, 0
            while power and not lvl < bound:
                rec(i + 1, prefix + (k,), power, lvl)
                k += 1
                if k > cap:
                    from .errors import TermCapError

                    raise TermCapError("multiseries needs too many powers", cap_name="CONWAY_TERM_CAP", cap_value=cap)
                if bounds[i] is None:
                    break
                power = mul_terms(power, smalls[i], bound)
                lvl = lvl * bounds[i]

        rec(0, (), {ONE_MONO: _F1}, ONE_MONO)
        return {m: c for m, c in total.items() if not is_zero(c)}

    merged = CandidateList(merge_candidates(*(s._drop_at_least(ONE_MONO).candidates() for s in streams)))
    return TermStream(trunc, lambda: monoid_candidates(merged, ONE_MONO))


def conway_limit(partials: Iterable["SurrealNF | TermStream"], bound: Mono, patience: int = 3):
    """Coefficientwise limit above ``bound``; NeedsMoreTerms if it has not settled."""
    from .errors import NeedsMoreTerms

    def terms() -> Iterator[Terms]:
        for p in partials:
            yield p.truncate(bound) if isinstance(p, TermStream) else dict(p.terms)

    got = stabilised_limit(terms(), bound, patience)
    if got is None:
        return NeedsMoreTerms("sequence did not stabilise above the requested monomial")
    return nf_from_terms(got)


@dataclass(frozen=True)
class ExpResult:
    """``exp(x) = e**P * w**q`` (the monomial ``atom``) times ``scalar`` times ``series``."""

    atom: Mono
    scalar: Scalar
    series: TermStream

    def stream(self) -> TermStream:
        return self.series.shift(self.atom).scale(self.scalar)

    def __mul__(self, other: "ExpResult") -> "ExpResult":
        return ExpResult(self.atom * other.atom, self.scalar * other.scalar, self.series * other.series)


def exp_nf(x: "SurrealNF | TermStream | Scalar | int") -> ExpResult:
    """Exponential split as atomic monomial, scalar ``e**re`` and ``exp`` of the infinitesimal part."""
    if not isinstance(x, TermStream):
        x = _nf(x)
    big, re, small = decompose(x)
    q = _F0
    rest = []
    for m, c in big.terms:
        if m == LOG_OMEGA_MONO and isinstance(c, Fraction):
            q = c
        else:
            rest.append((m, c))
    atom = Mono(nf_const(q), SurrealNF(tuple(rest)))
    scalar = scalar_exp(re)
    inv_fact = [Fraction(1)]

    def coeff(k: int) -> Fraction:
        while len(inv_fact) <= k:
            inv_fact.append(inv_fact[-1] / len(inv_fact))
        return inv_fact[k]

    series = as_stream(small).compose(coeff)
    return ExpResult(atom, scalar, series)


def ln_nf(x: "SurrealNF | TermStream") -> TermStream:
    """Natural logarithm of a positive number whose leading power of w is rational."""
    stream = as_stream(x)
    lead = stream.leading_term()
    if lead is None or sign(lead[1]) <= 0:
        raise DomainError("ln_nf needs a positive argument")
    mono, r = lead
    q = rational_value(mono.power)
    if q is None:
        raise UnsupportedFragmentError("ln of a leading power of w with non-rational exponent")
    head = nf_add(mono.expo, nf_scale(LOG_OMEGA, q)) if q else mono.expo
    head = nf_add(head, nf_const(scalar_ln(r)))
    _, _, rest = stream.split_leading()

    def coeff(k: int) -> Fraction:
        return _F0 if k == 0 else Fraction((-1) ** (k - 1), k)

    return TermStream.from_nf(head) + rest.compose(coeff)
