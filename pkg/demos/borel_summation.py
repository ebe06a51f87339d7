"""Three ways to give a value to sum k! x^(-k-1), compared against mpmath.

Run with ``python demos/borel_summation.py``.
"""

from fractions import Fraction

import mpmath
import numpy as np

from conway_analysis.borel import (
    borel_sum,
    factorial_series,
    gevrey1_certificate,
    least_term_sum,
    pade_continue,
    pv_laplace,
    borel_transform,
)
from conway_analysis.special import ei_weighted_constant, stirling_coefficients

series = factorial_series()
cert = gevrey1_certificate(series)
print(f"Gevrey-1 growth: |c_k| <= {cert.constant:.3g} k! {cert.rho:.3g}^-k")

model = pade_continue(borel_transform(series), 4)
numerator = ", ".join(map(str, model.numerator))
denominator = ", ".join(map(str, model.denominator))
poles = [round(float(p.location.real), 6) for p in model.poles]
print(f"Borel plane continuation: numerator ({numerator}), denominator ({denominator}), poles at {poles}")

print("\n  x     least-term        principal value     e^-x Ei(x)")
for x in np.arange(4, 21, 4):
    truncated, _ = least_term_sum(series, 1, Fraction(int(x)))
    pv = pv_laplace(model, float(x)).mid
    exact = mpmath.exp(-x) * mpmath.ei(x)
    print(f"{x:4d}  {float(truncated):.12f}  {float(pv):.12f}  {float(exact):.12f}")

grid = [Fraction(4 + k, 2) for k in range(77)]
print(f"\nsup of x^(1/2) |Ei(x) - least-term sum| on [2, 40]: {ei_weighted_constant(grid):.4f}")

alternating = factorial_series(alternating=True)
print("\nThe alternating series is Borel summable outright:")
for x in (5, 10, 20):
    print(f"  x = {x:2d}: {float(borel_sum(alternating, x).mid):.15f}   e^x E1(x) = {float(mpmath.exp(x) * mpmath.e1(x)):.15f}")

print("\nStirling coefficients from exponentiating the ln Gamma series:")
print("  ", ", ".join(str(c) for c in stirling_coefficients(6)))
