"""Random generators and independent oracles shared by the test modules."""

from __future__ import annotations

import math
import random
from fractions import Fraction

import mpmath

from conway_analysis.surreal import SurrealNF, mono_of, nf_const, nf_from_terms
from conway_analysis.transseries import GeneratorSet, TMono, Transseries, ts_from_terms


def random_nf(rng: random.Random, depth: int, max_terms: int, pool: list[SurrealNF] | None = None) -> SurrealNF:
    """Random normal form with nesting depth <= ``depth`` and <= ``max_terms`` terms.

    With a ``pool`` the exponents of the outer level are drawn from it.
    """
    n = rng.randint(0, max_terms)
    terms = {}
    for _ in range(n):
        if depth <= 1:
            y = nf_const(Fraction(rng.randint(-4, 4), rng.choice([1, 1, 2, 3])))
        elif pool is not None:
            y = rng.choice(pool)
        else:
            y = random_nf(rng, depth - 1, 3)
        terms[mono_of(y)] = Fraction(rng.randint(-9, 9), rng.randint(1, 4))
    return nf_from_terms(terms)


def exponent_pool(rng: random.Random, size: int = 300) -> list[SurrealNF]:
    return [random_nf(rng, 2, 3) for _ in range(size)]


def random_transseries(rng: random.Random, max_terms: int = 5) -> Transseries:
    """Finite level-one transseries over x^-1 and e^-x, with decaying terms only."""
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        k = rng.randint(0, 2)
        p = Fraction(rng.randint(-4, 1 if k else -1))
        terms[TMono(k, p, 0)] = Fraction(rng.randint(-6, 6) or 1, rng.randint(1, 3))
    return ts_from_terms(terms)


def random_integral_pair(rng: random.Random) -> tuple[Transseries, Transseries]:
    """Pair for the integral-property corpus: levels e^0 and e^-x only."""

    def one() -> Transseries:
        terms = {}
        for _ in range(rng.randint(1, 4)):
            k = rng.randint(0, 1)
            p = Fraction(rng.randint(-4, 1 if k else -1))
            terms[TMono(k, p, 0)] = Fraction(rng.randint(-6, 6) or 1, rng.randint(1, 3))
        return ts_from_terms(terms)

    return one(), one()


# expressions exercised by the parser round trip and the CLI schema check
EXPRESSION_CORPUS = [
    "w^(1/2)+3",
    "{0|1}",
    "integrate(exp(x),0,w)",
    "ei(w)",
    "(w+1)*(w-1)",
    "1/(w+1)",
    "exp(w^-1)",
    "ln(1+w^-1)",
    "w^w",
    "exp(w)*w^-2",
    "sum(k>=0) (k!)*x^(-k-1)*exp(-x)",
    "sum(k>=1) w^-k",
    "{-1/2|-1/4}",
    "{3|w}",
    "{w-1|w+1}",
    "ei1(w)",
    "stirling(w)",
    "lngamma(w)",
    "-w^2",
    "2^10/3",
    "exp(-x)*x^-1 + x^-2",
    "integrate(x^-2, 1, 2)",
    "ln(x)",
    "ei(w+1)",
    "pi*w",
]


# --------------------------------------------------------------------------
# sign expansions, enumerated independently of the library


def dyadic_from_signs(signs: tuple[int, ...]) -> Fraction:
    """Value of a finite sign expansion by the interval-halving rule."""
    lo: Fraction | None = None
    hi: Fraction | None = None
    value = Fraction(0)
    for s in signs:
        if s > 0:
            lo = value
            value = value + 1 if hi is None else (value + hi) / 2
        else:
            hi = value
            value = value - 1 if lo is None else (value + lo) / 2
    return value


def all_sign_expansions(max_len: int) -> dict[Fraction, int]:
    """Every dyadic reachable with at most ``max_len`` signs, mapped to its birthday."""
    out: dict[Fraction, int] = {Fraction(0): 0}
    frontier: list[tuple[int, ...]] = [()]
    for length in range(1, max_len + 1):
        nxt = []
        for prefix in frontier:
            for s in (1, -1):
                signs = prefix + (s,)
                nxt.append(signs)
                out.setdefault(dyadic_from_signs(signs), length)
        frontier = nxt
    return out


def brute_force_simplest(lo: Fraction | None, hi: Fraction | None, table: dict[Fraction, int]) -> Fraction:
    best = None
    for value, born in table.items():
        if (lo is None or lo < value) and (hi is None or value < hi):
            if best is None or born < best[1]:
                best = (value, born)
    assert best is not None, "enumeration too short"
    return best[0]


# --------------------------------------------------------------------------
# numeric oracles


def ei_mpmath(x: float) -> float:
    return float(mpmath.ei(x))


def e1_continued_fraction(x: float, depth: int = 200) -> float:
    """E_1(x) for x > 0 by its continued fraction, evaluated backwards."""
    tail = 0.0
    for n in range(depth, 0, -1):
        tail = n / (1 + n / (x + tail))
    return math.exp(-x) / (x + tail)


def bernoulli_recurrence(n: int) -> Fraction:
    """B_n from sum_{k<=n} C(n+1, k) B_k = 0, with B_1 = -1/2."""
    b = [Fraction(1)]
    for m in range(1, n + 1):
        b.append(-sum(math.comb(m + 1, k) * b[k] for k in range(m)) / (m + 1))
    return b[n]


def stirling_by_power_series(n: int) -> list[Fraction]:
    """exp of the ln Gamma tail sum B_2k/(2k(2k-1)) u^(2k-1) as a power series in u = 1/w.

    Uses the recurrence for E = exp(L): k e_k = sum_j j l_j e_(k-j).
    """
    lcoef = [Fraction(0)] * (n + 1)
    for j in range(1, n + 1):
        if j % 2 == 1:
            m = j + 1
            lcoef[j] = bernoulli_recurrence(m) / (m * (m - 1))
    e = [Fraction(1)] + [Fraction(0)] * n
    for k in range(1, n + 1):
        e[k] = sum(j * lcoef[j] * e[k - j] for j in range(1, k + 1)) / k
    return e


__all__ = [
    "EXPRESSION_CORPUS",
    "GeneratorSet",
    "all_sign_expansions",
    "bernoulli_recurrence",
    "brute_force_simplest",
    "dyadic_from_signs",
    "e1_continued_fraction",
    "ei_mpmath",
    "exponent_pool",
    "random_nf",
    "random_transseries",
    "stirling_by_power_series",
]
