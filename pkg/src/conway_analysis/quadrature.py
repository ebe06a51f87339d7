"""Adaptive Gauss-Legendre quadrature on finite intervals (double precision).

Panels are bisected until a 20-point and a 40-point rule agree.  The sum of
the panel discrepancies is returned as the error estimate.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Sequence

import numpy as np


@lru_cache(maxsize=8)
def _rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return nodes, weights


def _panel(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, n: int) -> float:
    nodes, weights = _rule(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return float(half * np.dot(weights, f(mid + half * nodes)))


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    tol: float = 1e-12,
    max_panels: int = 20000,
) -> tuple[float, float]:
    """Integrate a vectorised ``f`` over consecutive breakpoints; returns (value, error)."""
    stack = [(float(a), float(b)) for a, b in zip(breakpoints[:-1], breakpoints[1:]) if b > a]
    total_len = float(breakpoints[-1] - breakpoints[0]) or 1.0
    value = 0.0
    error = 0.0
    panels = 0
    while stack:
        a, b = stack.pop()
        coarse = _panel(f, a, b, 20)
        fine = _panel(f, a, b, 40)
        diff = abs(fine - coarse)
        budget = tol * max(1.0, abs(fine)) * (b - a) / total_len
        panels += 1
        if diff <= budget or b - a < 1e-12 * total_len or panels > max_panels:
            value += fine
            error += diff
        else:
            m = 0.5 * (a + b)
            stack.append((m, b))
            stack.append((a, m))
    return value, error
