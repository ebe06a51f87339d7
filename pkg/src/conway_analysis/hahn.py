"""Lazy grid-based series over an ordered monomial group.

A series is described by two callables:

* ``trunc(bound)`` returns the exact terms whose monomial is ``>= bound``;
* ``candidates()`` yields, in strictly decreasing order, monomials that
  contain the support.

Every arithmetic operation builds new callables from those of its operands,
so nothing is evaluated until a truncation is requested.  Truncations are
memoised per series under a lock, which makes shared streams safe to read
from several threads.

Monomials must be hashable, totally ordered through ``<`` and ``==``, and
support ``*`` and ``/``.  A larger monomial is a dominant (bigger) one.
"""

from __future__ import annotations

import heapq
import threading
from fractions import Fraction
from typing import Any, Callable, Generic, Iterable, Iterator, Sequence, TypeVar

from . import config
from .errors import DomainError, TermCapError
from .scalar import Ball, Scalar, Sym, is_zero, sign

M = TypeVar("M")
Terms = dict
CoeffFn = Callable[[int], Scalar]


class _Rev:
    """Heap entry ordering monomials from largest to smallest."""

    __slots__ = ("m", "i", "j")

    def __init__(self, m: Any, i: int = 0, j: int = 0) -> None:
        self.m = m
        self.i = i
        self.j = j

    def __lt__(self, other: "_Rev") -> bool:
        return other.m < self.m


class CandidateList:
    """Thread-safe memoised view of a decreasing candidate iterator."""

    __slots__ = ("_it", "_items", "_done", "_lock")

    def __init__(self, it: Iterator[Any]) -> None:
        self._it = it
        self._items: list[Any] = []
        self._done = False
        self._lock = threading.RLock()

    def get(self, i: int) -> Any | None:
        items = self._items
        if i < len(items):
            return items[i]
        with self._lock:
            cap = config.term_cap() * 8
            while len(self._items) <= i and not self._done:
                if len(self._items) >= cap:
                    raise TermCapError(
                        f"more than {cap} support candidates requested",
                        cap_name="CONWAY_TERM_CAP",
                        cap_value=config.term_cap(),
                    )
                try:
                    self._items.append(next(self._it))
                except StopIteration:
                    self._done = True
            return self._items[i] if i < len(self._items) else None

    def __iter__(self) -> Iterator[Any]:
        i = 0
        while True:
            m = self.get(i)
            if m is None:
                return
            yield m
            i += 1


# candidate combinators -------------------------------------------------------

def merge_candidates(*iterables: Iterable[Any]) -> Iterator[Any]:
    heap: list[tuple[_Rev, int, Iterator[Any]]] = []
    for k, it in enumerate(iterables):
        it = iter(it)
        for m in it:
            heap.append((_Rev(m), k, it))
            break
    heapq.heapify(heap)
    last = None
    while heap:
        entry, k, it = heapq.heappop(heap)
        if last is None or not entry.m == last:
            last = entry.m
            yield entry.m
        for m in it:
            heapq.heappush(heap, (_Rev(m), k, it))
            break


def merge_family(heads: Iterator[tuple[Any, Iterable[Any]]]) -> Iterator[Any]:
    """Merge infinitely many decreasing streams whose upper bounds do not increase.

    ``heads`` yields ``(upper_bound, stream)`` pairs with non-increasing bounds.
    """
    heap: list[tuple[_Rev, int, Iterator[Any]]] = []
    pending = iter(heads)
    nxt = next(pending, None)
    counter = 0
    last = None
    while heap or nxt is not None:
        # pull in every stream whose bound may exceed the current heap top
        while nxt is not None and (not heap or not nxt[0] < heap[0][0].m):
            it = iter(nxt[1])
            for m in it:
                counter += 1
                heapq.heappush(heap, (_Rev(m), counter, it))
                break
            nxt = next(pending, None)
        if not heap:
            continue
        entry, _, it = heapq.heappop(heap)
        if last is None or not entry.m == last:
            last = entry.m
            yield entry.m
        for m in it:
            counter += 1
            heapq.heappush(heap, (_Rev(m), counter, it))
            break


def product_candidates(a: CandidateList, b: CandidateList) -> Iterator[Any]:
    a0, b0 = a.get(0), b.get(0)
    if a0 is None or b0 is None:
        return
    heap = [_Rev(a0 * b0, 0, 0)]
    seen = {(0, 0)}
    last = None
    while heap:
        entry = heapq.heappop(heap)
        if last is None or not entry.m == last:
            last = entry.m
            yield entry.m
        for ni, nj in ((entry.i + 1, entry.j), (entry.i, entry.j + 1)):
            if (ni, nj) in seen:
                continue
            x, y = a.get(ni), b.get(nj)
            if x is not None and y is not None:
                seen.add((ni, nj))
                heapq.heappush(heap, _Rev(x * y, ni, nj))


def monoid_candidates(gens: CandidateList, one: Any) -> Iterator[Any]:
    """Decreasing enumeration of the monoid generated by ``gens`` (all below one)."""
    yield one
    g0 = gens.get(0)
    if g0 is None:
        return
    heap = [_Rev(g0, 0)]
    last = one
    while heap:
        entry = heapq.heappop(heap)
        if not entry.m == last:
            last = entry.m
            yield entry.m
        i = entry.i
        gi = gens.get(i)
        heapq.heappush(heap, _Rev(entry.m * gi, i))
        nxt = gens.get(i + 1)
        if nxt is not None:
            heapq.heappush(heap, _Rev(entry.m / gi * nxt, i + 1))


# finite term dictionaries -------------------------------------------------

def add_terms(a: Terms, b: Terms, scale_b: Scalar | int = 1) -> Terms:
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, 0) + c * scale_b if scale_b != 1 else out.get(m, 0) + c
        if is_zero(v):
            out.pop(m, None)
        else:
            out[m] = v
    return out


def mul_terms(a: Terms, b: Terms, bound: Any | None = None) -> Terms:
    out: Terms = {}
    if bound is None:
        for ma, ca in a.items():
            for mb, cb in b.items():
                m = ma * mb
                v = out.get(m)
                out[m] = ca * cb if v is None else v + ca * cb
    else:
        # with b in decreasing order the products fall below the bound for good
        b_sorted = sorted_terms(b)
        for ma, ca in a.items():
            for mb, cb in b_sorted:
                m = ma * mb
                if m < bound:
                    break
                v = out.get(m)
                out[m] = ca * cb if v is None else v + ca * cb
    return {m: c for m, c in out.items() if not is_zero(c)}


def scale_terms(a: Terms, c: Scalar) -> Terms:
    if is_zero(c):
        return {}
    return {m: v * c for m, v in a.items()}


def sorted_terms(a: Terms) -> list[tuple[Any, Scalar]]:
    return sorted(a.items(), key=lambda t: _Rev(t[0]))


def filter_terms(a: Terms, bound: Any) -> Terms:
    return {m: c for m, c in a.items() if not m < bound}


class GridCertificate:
    """Support is contained in ``union(seed * <gens>)``; every generator is below one."""

    __slots__ = ("seeds", "gens")

    def __init__(self, seeds: Sequence[Any], gens: Sequence[Any]) -> None:
        self.seeds = tuple(seeds)
        self.gens = tuple(gens)

    def __repr__(self) -> str:
        return f"GridCertificate(seeds={self.seeds!r}, gens={self.gens!r})"


def _merge_certs(a: GridCertificate | None, b: GridCertificate | None, product: bool) -> GridCertificate | None:
    if a is None or b is None:
        return None
    gens = tuple(dict.fromkeys(a.gens + b.gens))
    if product:
        seeds = tuple(dict.fromkeys(x * y for x in a.seeds for y in b.seeds))
    else:
        seeds = tuple(dict.fromkeys(a.seeds + b.seeds))
    return GridCertificate(seeds, gens)


class LazySeries(Generic[M]):
    """A lazily evaluated, memoised series; subclasses fix the monomial type."""

    ONE: Any = None  # identity monomial, set by subclasses

    __slots__ = ("_trunc", "_cands", "_finite", "certificate", "_lock", "_cache_bound", "_cache", "__weakref__")

    def __init__(
        self,
        trunc: Callable[[Any], Terms] | None,
        candidates: Callable[[], Iterator[Any]] | None,
        *,
        finite: Terms | None = None,
        certificate: GridCertificate | None = None,
    ) -> None:
        if finite is not None:
            finite = {m: c for m, c in finite.items() if not is_zero(c)}
            ordered = [m for m, _ in sorted_terms(finite)]
            certificate = GridCertificate(ordered, ())
            self._cands = CandidateList(iter(ordered))
            self._trunc = lambda bound, _f=finite: filter_terms(_f, bound)
        else:
            assert trunc is not None and candidates is not None
            self._cands = CandidateList(candidates())
            self._trunc = trunc
        self._finite = finite
        self.certificate = certificate
        self._lock = threading.RLock()
        self._cache_bound: Any = None
        self._cache: Terms = {}

    # construction hooks -------------------------------------------------
    def _derive(self, trunc, candidates, *, finite=None, certificate=None, others: Sequence["LazySeries"] = ()):
        """Create a series of the same kind; subclasses propagate metadata here."""
        return type(self)(trunc, candidates, finite=finite, certificate=certificate)

    @classmethod
    def from_terms(cls, terms: Terms | Iterable[tuple[Any, Scalar]], certificate: GridCertificate | None = None):
        d: Terms = {}
        for m, c in dict(terms).items() if isinstance(terms, dict) else terms:
            d[m] = d.get(m, 0) + c
        if certificate is None:
            ordered = sorted_terms({m: c for m, c in d.items() if not is_zero(c)})
            certificate = GridCertificate([m for m, _ in ordered], [])
        return cls(None, None, finite=d, certificate=certificate)

    # inspection -----------------------------------------------------------
    @property
    def is_finite(self) -> bool:
        return self._finite is not None

    def finite_terms(self) -> Terms | None:
        return None if self._finite is None else dict(self._finite)

    def candidate(self, i: int) -> Any | None:
        return self._cands.get(i)

    def upper_bound(self) -> Any | None:
        """Largest monomial that may carry a nonzero coefficient (None for zero)."""
        return self._cands.get(0)

    def candidates(self) -> Iterator[Any]:
        return iter(self._cands)

    def truncate(self, bound: Any) -> Terms:
        """Exact terms with monomial ``>= bound``."""
        if self._finite is not None:
            return filter_terms(self._finite, bound)
        with self._lock:
            if self._cache_bound is not None and not bound < self._cache_bound:
                return filter_terms(self._cache, bound)
            terms = {m: c for m, c in self._trunc(bound).items() if not is_zero(c) and not m < bound}
            self._cache_bound, self._cache = bound, terms
            return dict(terms)

    def coefficient(self, m: Any) -> Scalar:
        return self.truncate(m).get(m, Fraction(0))

    def iter_terms(self, max_candidates: int | None = None) -> Iterator[tuple[Any, Scalar]]:
        """Nonzero terms in decreasing order, inspecting at most ``max_candidates``."""
        if self._finite is not None:
            yield from sorted_terms(self._finite)
            return
        limit = max_candidates if max_candidates is not None else config.term_cap()
        idx = 0
        chunk = 4
        while idx < limit:
            hi = min(idx + chunk, limit) - 1
            bound = self._cands.get(hi)
            if bound is None:
                # fewer candidates than requested: finish with the last one
                last = None
                j = idx
                while self._cands.get(j) is not None:
                    last = self._cands.get(j)
                    j += 1
                if last is None:
                    return
                bound, hi = last, j - 1
            top = self._cands.get(idx)
            terms = self.truncate(bound)
            for m, c in sorted_terms(terms):
                if not top < m:
                    yield m, c
            idx = hi + 1
            chunk = min(chunk * 2, 64)

    def take(self, n: int, max_candidates: int | None = None) -> tuple[list[tuple[Any, Scalar]], Any | None]:
        """First ``n`` nonzero terms and the largest monomial a remainder could have."""
        out: list[tuple[Any, Scalar]] = []
        last = None
        for m, c in self.iter_terms(max_candidates):
            if len(out) == n:
                return out, self._next_candidate_below(last)
            out.append((m, c))
            last = m
        if len(out) == n and self._finite is None:
            nxt = self._next_candidate_below(last) if last is not None else self.upper_bound()
            return out, nxt
        return out, None

    def _next_candidate_below(self, m: Any | None) -> Any | None:
        if m is None:
            return self.upper_bound()
        i = 0
        while True:
            c = self._cands.get(i)
            if c is None:
                return None
            if c < m:
                return c
            i += 1

    def leading_term(self, max_candidates: int | None = None) -> tuple[Any, Scalar] | None:
        for term in self.iter_terms(max_candidates):
            return term
        return None

    def is_zero_certain(self) -> bool:
        return self.upper_bound() is None

    # arithmetic -------------------------------------------------------------
    def _coerce(self, other: Any) -> "LazySeries | None":
        if isinstance(other, LazySeries):
            return other
        return None

    def __add__(self, other: Any):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, (int, Fraction, Sym, Ball)):
                o = self.scalar(other)
            else:
                return NotImplemented
        a, b = self, o
        if a._finite is not None and b._finite is not None:
            return self._derive(None, None, finite=add_terms(a._finite, b._finite),
                                certificate=_merge_certs(a.certificate, b.certificate, False), others=(a, b))
        return self._derive(
            lambda bound: add_terms(a.truncate(bound), b.truncate(bound)),
            lambda: merge_candidates(a.candidates(), b.candidates()),
            certificate=_merge_certs(a.certificate, b.certificate, False),
            others=(a, b),
        )

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other: Any):
        return self + (-other)

    def __rsub__(self, other: Any):
        return (-self) + other

    def scalar(self, c: Scalar):
        c = Fraction(c) if isinstance(c, int) else c
        return self._derive(None, None, finite={self.ONE: c} if not is_zero(c) else {},
                            certificate=GridCertificate([self.ONE], []), others=(self,))

    def scale(self, c: Scalar | int):
        c = Fraction(c) if isinstance(c, int) else c
        if self._finite is not None:
            return self._derive(None, None, finite=scale_terms(self._finite, c), certificate=self.certificate, others=(self,))
        if is_zero(c):
            return self._derive(None, None, finite={}, others=(self,))
        src = self
        return self._derive(lambda bound: scale_terms(src.truncate(bound), c), src.candidates,
                            certificate=src.certificate, others=(self,))

    def shift(self, mono: Any):
        """Multiply by a monomial."""
        src = self
        cert = None if src.certificate is None else GridCertificate([s * mono for s in src.certificate.seeds], src.certificate.gens)
        if src._finite is not None:
            return self._derive(None, None, finite={m * mono: c for m, c in src._finite.items()}, certificate=cert, others=(self,))
        return self._derive(
            lambda bound: {m * mono: c for m, c in src.truncate(bound / mono).items()},
            lambda: (m * mono for m in src.candidates()),
            certificate=cert,
            others=(self,),
        )

    def __mul__(self, other: Any):
        o = self._coerce(other)
        if o is None:
            if isinstance(other, (int, Fraction, Sym, Ball)):
                return self.scale(other)
            return NotImplemented
        a, b = self, o
        cert = _merge_certs(a.certificate, b.certificate, True)
        if a._finite is not None and b._finite is not None:
            return self._derive(None, None, finite=mul_terms(a._finite, b._finite), certificate=cert, others=(a, b))
        ua, ub = a.upper_bound(), b.upper_bound()
        if ua is None or ub is None:
            return self._derive(None, None, finite={}, others=(a, b))

        def trunc(bound: Any) -> Terms:
            return mul_terms(a.truncate(bound / ub), b.truncate(bound / ua), bound)

        return self._derive(trunc, lambda: product_candidates(a._cands, b._cands), certificate=cert, others=(a, b))

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        out = self.scalar(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def compose(self, coeff: CoeffFn, *, finite_order: int | None = None):
        """``sum_k coeff(k) * self**k`` for an infinitesimal series ``self``.

        ``finite_order`` marks power series that are polynomials of that degree.
        """
        eps = self
        one = self.ONE
        ue = eps.upper_bound()
        if ue is not None and not ue < one:
            # candidates may start above one even though the support does not
            eps = eps._drop_at_least(one)
            ue = eps.upper_bound()
        cert = None
        if eps.certificate is not None and all(s < one for s in eps.certificate.seeds):
            cert = GridCertificate([one], tuple(dict.fromkeys(eps.certificate.seeds + eps.certificate.gens)))
        if ue is None:
            return self._derive(None, None, finite={one: coeff(0)}, certificate=GridCertificate([one], []), others=(self,))
        if eps._finite is not None and finite_order is not None:
            total: Terms = {}
            power: Terms = {one: Fraction(1)}
            for k in range(finite_order + 1):
                total = add_terms(total, power, coeff(k))
                power = mul_terms(power, eps._finite)
            return self._derive(None, None, finite=total, certificate=cert, others=(self,))
        cap = config.term_cap()

        def trunc(bound: Any) -> Terms:
            small = eps.truncate(bound)
            total: Terms = {}
            power: Terms = {one: Fraction(1)}
            level = one
            k = 0
            while power and not level < bound:
                if finite_order is not None and k > finite_order:
                    break
                c = coeff(k)
                if not is_zero(c):
                    total = add_terms(total, power, c)
                k += 1
                if k > cap:
                    raise TermCapError(
                        f"power series composition needs more than {cap} powers",
                        cap_name="CONWAY_TERM_CAP",
                        cap_value=cap,
                    )
                power = mul_terms(power, small, bound)
                level = level * ue
            return total

        gens = eps._cands
        return self._derive(trunc, lambda: monoid_candidates(gens, one), certificate=cert, others=(self,))

    def _drop_at_least(self, bound: Any):
        """Copy without terms ``>= bound`` (used for infinitesimal parts)."""
        src = self
        if src._finite is not None:
            return self._derive(None, None, finite={m: c for m, c in src._finite.items() if m < bound},
                                certificate=src.certificate, others=(self,))
        return self._derive(
            lambda b: {m: c for m, c in src.truncate(b).items() if m < bound},
            lambda: (m for m in src.candidates() if m < bound),
            certificate=src.certificate,
            others=(self,),
        )

    def keep_at_least(self, bound: Any):
        """Finite part of the series: terms ``>= bound``."""
        return self._derive(None, None, finite=self.truncate(bound), others=(self,))

    def split_leading(self, max_candidates: int | None = None) -> tuple[Any, Scalar, "LazySeries"]:
        """Return ``(lead_monomial, lead_coeff, rest)`` with ``self = c*L*(1 + rest)``."""
        lead = self.leading_term(max_candidates)
        if lead is None:
            raise ZeroDivisionError("series is zero")
        mono, c = lead
        rest = (self.shift(self.ONE / mono).scale(1 / c) - self.scalar(1))._drop_at_least(self.ONE)
        return mono, c, rest

    def inverse(self, max_candidates: int | None = None):
        """Multiplicative inverse; the leading term is located first."""
        if self._finite is not None and not self._finite:
            raise ZeroDivisionError("inverse of zero")
        mono, c, rest = self.split_leading(max_candidates)
        geometric = rest.compose(lambda k: Fraction(-1) ** k)
        return geometric.shift(self.ONE / mono).scale(1 / c)

    def binomial_power(self, exponent: Fraction) -> "LazySeries":
        """``(1 + self) ** exponent`` for infinitesimal ``self``."""
        q = Fraction(exponent)
        coeffs: list[Fraction] = [Fraction(1)]

        def coeff(k: int) -> Fraction:
            while len(coeffs) <= k:
                j = len(coeffs)
                coeffs.append(coeffs[-1] * (q - j + 1) / j)
            return coeffs[k]

        order = int(q) if q.denominator == 1 and q >= 0 else None
        return self.compose(coeff, finite_order=order)

    # comparisons ----------------------------------------------------------------
    def sign(self, max_candidates: int | None = None) -> int:
        lead = self.leading_term(max_candidates)
        return 0 if lead is None else sign(lead[1])

    def agrees_with(self, other: "LazySeries", bound: Any) -> bool:
        return self.truncate(bound) == other.truncate(bound)


def stabilised_limit(partials: Iterable[Terms], bound: Any, patience: int = 3) -> Terms | None:
    """Limit of finite series in the coefficientwise sense above ``bound``.

    Returns the common truncation once ``patience`` consecutive partial results
    agree above ``bound``, or ``None`` if the sequence ends first.
    """
    previous: Terms | None = None
    streak = 0
    for item in partials:
        current = filter_terms(item, bound)
        if current == previous:
            streak += 1
            if streak >= patience:
                return current
        else:
            streak = 0
        previous = current
    return None


def require_real(value: object) -> None:
    if isinstance(value, complex):
        raise DomainError("complex input is not supported")
