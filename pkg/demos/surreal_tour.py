"""A walk through exact surreal arithmetic and simplest-number brackets.

Run with ``python demos/surreal_tour.py``.
"""

from fractions import Fraction

from conway_analysis.cli import evaluate, render
from conway_analysis.genetic import GeneticBracket, birthday, genetic_ei, resolve_bracket, sign_expansion
from conway_analysis.surreal import OMEGA, exp_nf, ln_nf, nf_inverse, omega_pow


def show(label: str, value: object, terms: int = 6) -> None:
    print(f"{label:<28} {render(value, terms)}")


print("Normal forms are finite sums of w^y * r, kept in decreasing order.")
show("(w + 1)(w - 1)", (OMEGA + 1) * (OMEGA - 1))
show("w^(1/2) + 3", omega_pow(Fraction(1, 2)) + 3)

print("\nInverses are lazy: only the requested prefix is ever built.")
show("1/(w + 1)", nf_inverse(OMEGA + 1))
show("exp(w^-1)", exp_nf(omega_pow(-1)).stream())
show("ln(1 + w^-1)", ln_nf((1 + omega_pow(-1)).stream()))

print("\nThe simplest number between two options, and where it sits in the tree.")
for left, right in [(0, 1), (Fraction(-5, 2), Fraction(-9, 4)), (3, None)]:
    value = resolve_bracket(GeneticBracket([left], [] if right is None else [right]))
    signs = "".join("+" if s > 0 else "-" for s in sign_expansion(value))
    print(f"  {{{left} | {'' if right is None else right}}} = {value}, born on day {birthday(value)}, signs {signs or '(empty)'}")
print("  {w - 1 | w + 1} =", render(resolve_bracket(GeneticBracket([OMEGA - 1], [OMEGA + 1]))))

print("\nThe exponential integral at w, obtained from its defining bracket:")
show("Ei(w)", genetic_ei(OMEGA), 5)
show("Ei(w + 1)", genetic_ei(OMEGA + 1), 4)

print("\nThe same values are reachable from the expression language used by the CLI:")
for text in ["{3|w}", "sum(k>=1) w^-k", "integrate(exp(x),0,w)"]:
    show(text, evaluate(text), 4)
