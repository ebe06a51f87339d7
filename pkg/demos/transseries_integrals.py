"""Transseries in x, their antiderivatives, and evaluation at w.

Run with ``python demos/transseries_integrals.py``.
"""

from fractions import Fraction

from conway_analysis.cli import render
from conway_analysis.surreal import OMEGA
from conway_analysis.transseries import (
    TMono,
    ei_transseries,
    ts_definite_integral,
    ts_diff,
    ts_eval_at,
    ts_from_terms,
    ts_integrate,
    ts_inverse,
)

# TMono(weight, power, log) stands for x^power * e^(-weight x) * ln(x)^log
f = ts_from_terms({TMono(0, -2): 1, TMono(1, -1): Fraction(1, 2)})
print("f            =", render(f))
print("f'           =", render(ts_diff(f)))
F = ts_integrate(f)
print("A(f)         =", render(F, 5))
# the difference is an infinite sum of zeros, so look at it down to x^-10 e^-x
print("A(f)' - f    =", (ts_diff(F) - f).truncate(TMono(1, -10)), "through x^-10 e^-x")

print("\n1/(x^-1 + 3 e^-x) expands in powers of x e^-x:")
print("   ", render(ts_inverse(ts_from_terms({TMono(0, -1): 1, TMono(1, 0): 3})), 4))

print("\nDefinite integrals take real or surreal endpoints:")
print("  int_1^2 x^-2 dx  =", ts_definite_integral(ts_from_terms({TMono(0, -2): 1}), 1, 2))
print("  int_0^w e^s ds   =", render(ts_definite_integral(ts_from_terms({TMono(-1, 0): 1}), 0, OMEGA)))

print("\nThe Ei transseries, evaluated at w + 1, reproduces the bracket definition:")
print("   ", render(ts_eval_at(ei_transseries(), OMEGA + 1), 4))
