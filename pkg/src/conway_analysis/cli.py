"""Command-line front end: ``conway eval|bracket|ei|borel|special|selftest``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from typing import Any, Callable, Sequence

import mpmath

from . import config
from .borel import FormalPowerSeries, borel_sum, least_term_sum
from .errors import (
    ConwayError,
    DomainError,
    NeedsMoreTerms,
    NeedsMoreTermsError,
    ParseError,
    ResourceError,
    TermCapError,
    UnsupportedFragmentError,
)
from .genetic import NEG_INF, POS_INF, EiInterval, GeneticBracket, genetic_ei, genetic_ei1, resolve_bracket
from .hahn import Terms, add_terms, merge_family
from .scalar import E, PI, Ball, Sym, as_scalar, format_scalar, scalar_exp, scalar_ln, scalar_pow, sign, to_mpf
from .special import lngamma_at_omega, lngamma_value_at, stirling_at_omega, stirling_coefficients
from .surreal import (
    OMEGA,
    SurrealNF,
    TermStream,
    as_stream,
    exp_nf,
    ln_nf,
    nf_const,
    nf_inverse,
    omega_pow,
)
from .syntax import BinOp, Bracket, Call, Factorial, Name, Neg, Num, Pow, Sum, parse, render_mono, render_tmono, render_value
from .transseries import (
    LOG_X,
    TMono,
    Transseries,
    ei_transseries,
    ts_constant,
    ts_definite_integral,
    ts_from_terms,
    ts_integrate,
    ts_inverse,
    ts_monomial,
)

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_PARSE = 2
EXIT_UNSUPPORTED = 3
EXIT_NEEDS_MORE_TERMS = 4
EXIT_DOMAIN = 5
EXIT_RESOURCE = 6

_SCALARS = (int, Fraction, Sym, Ball)


# --------------------------------------------------------------------------
# evaluation


def _is_scalar(v: object) -> bool:
    return isinstance(v, _SCALARS) and not isinstance(v, bool)


def _settle(v: Any) -> Any:
    if isinstance(v, NeedsMoreTerms):
        raise NeedsMoreTermsError(v)
    if isinstance(v, TermStream) and v.is_finite:
        return v.to_nf()
    if isinstance(v, SurrealNF):
        real = v.real_value()
        if real is not None and v.is_real():
            return real
    return v


def _to_ts(v: Any) -> Transseries:
    if isinstance(v, Transseries):
        return v
    if _is_scalar(v):
        return ts_constant(v)
    raise UnsupportedFragmentError("cannot mix surreal (w) and transseries (x) values")


def _to_surreal(v: Any) -> SurrealNF | TermStream:
    if isinstance(v, (SurrealNF, TermStream)):
        return v
    if _is_scalar(v):
        return nf_const(as_scalar(v))
    raise UnsupportedFragmentError(f"expected a surreal value, got {type(v).__name__}")


def _kind(a: Any, b: Any) -> str:
    if isinstance(a, Transseries) or isinstance(b, Transseries):
        return "ts"
    if isinstance(a, (SurrealNF, TermStream)) or isinstance(b, (SurrealNF, TermStream)):
        return "nf"
    if isinstance(a, EiInterval) or isinstance(b, EiInterval):
        raise UnsupportedFragmentError("arithmetic on Ei intervals is not supported")
    return "scalar"


def _arith(op: str, a: Any, b: Any) -> Any:
    kind = _kind(a, b)
    if kind == "ts":
        a, b = _to_ts(a), _to_ts(b)
        if op == "/":
            return a * ts_inverse(b)
    elif kind == "nf":
        a, b = _to_surreal(a), _to_surreal(b)
        if op == "/":
            if isinstance(b, SurrealNF) and len(b.terms) == 1:
                return a / b
            return as_stream(a) * nf_inverse(b)
    else:
        a, b = as_scalar(a), as_scalar(b)
        if op == "/":
            if sign(b) == 0:
                raise DomainError("division by zero")
            return a * scalar_pow(b, -1)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    return a * b


def _rational(v: Any, what: str) -> Fraction:
    v = _settle(v)
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, Fraction):
        return v
    raise UnsupportedFragmentError(f"{what} must be rational")


def _power(base: Any, exponent: Any) -> Any:
    exponent = _settle(exponent)
    if isinstance(base, SurrealNF) and base == OMEGA:
        return omega_pow(exponent)
    q = _rational(exponent, "the exponent")
    if _is_scalar(base):
        return scalar_pow(as_scalar(base), q)
    if isinstance(base, Transseries):
        if base.is_finite and len(base.finite_terms()) == 1:
            (m, c), = base.finite_terms().items()
            if (m.log * q).denominator == 1:
                return ts_from_terms({TMono(m.weight * q, m.power * q, int(m.log * q)): scalar_pow(c, q)})
        if q.denominator == 1:
            return base ** int(q) if q >= 0 else ts_inverse(base ** int(-q))
        raise UnsupportedFragmentError("rational powers of multi-term transseries")
    stream = as_stream(base)
    if q.denominator == 1 and q >= 0:
        return stream ** int(q)
    mono, c, rest = stream.split_leading()
    return rest.binomial_power(q).shift(mono**q).scale(scalar_pow(c, q))


def _exp(v: Any) -> Any:
    v = _settle(v)
    if _is_scalar(v):
        return scalar_exp(as_scalar(v))
    if isinstance(v, Transseries):
        if not v.is_finite:
            raise UnsupportedFragmentError("exp of an infinite transseries")
        terms = v.finite_terms()
        slope = terms.pop(TMono(0, 1, 0), Fraction(0))
        const = terms.pop(TMono(), Fraction(0))
        if terms:
            raise UnsupportedFragmentError("exp is supported for c*x + r only")
        return ts_from_terms({TMono(-as_scalar(slope), 0, 0): scalar_exp(as_scalar(const))})
    if isinstance(v, (SurrealNF, TermStream)):
        return exp_nf(v).stream()
    raise UnsupportedFragmentError("exp of this value")


def _ln(v: Any) -> Any:
    v = _settle(v)
    if _is_scalar(v):
        return scalar_ln(as_scalar(v))
    if isinstance(v, Transseries):
        if v.is_finite and len(v.finite_terms()) == 1:
            (m, c), = v.finite_terms().items()
            if m.weight == 0 and m.log == 0 and sign(c) > 0:
                out: dict = {TMono(): scalar_ln(c)}
                if m.power:
                    out[LOG_X] = m.power
                return ts_from_terms(out)
        raise UnsupportedFragmentError("ln is supported for c*x^p only")
    return ln_nf(v)


def _series_sum(term_at: Callable[[int], Any], start: int) -> Any:
    """Lazy sum of summands whose leading monomials strictly decrease."""
    cache: dict[int, Any] = {}
    cap = config.term_cap()

    def term(k: int) -> Any:
        if k not in cache:
            t = _settle(term_at(k))
            cache[k] = as_stream(t) if not isinstance(t, Transseries) else t
        return cache[k]

    first = term(start)
    cls = Transseries if isinstance(first, Transseries) else TermStream

    def nonzero(k: int):
        zeros = 0
        while True:
            t = term(k)
            if isinstance(t, Transseries) != (cls is Transseries):
                raise UnsupportedFragmentError("summands mix surreal and transseries values")
            ub = t.upper_bound()
            if ub is not None:
                return k, t, ub
            zeros += 1
            if zeros > cap:
                raise TermCapError("summands stay zero", cap_name="CONWAY_TERM_CAP", cap_value=cap)
            k += 1

    def walk():
        k, prev = start, None
        while True:
            k, t, ub = nonzero(k)
            if prev is not None and not ub < prev:
                raise UnsupportedFragmentError("summand leading monomials must strictly decrease")
            prev = ub
            yield k, t, ub
            k += 1

    def trunc(bound) -> Terms:
        out: Terms = {}
        for _, t, ub in walk():
            if ub < bound:
                break
            out = add_terms(out, t.truncate(bound))
        return out

    def candidates():
        return merge_family((ub, t.candidates()) for _, t, ub in walk())

    if cls is Transseries:
        return Transseries(trunc, candidates, generators=first.generators)
    return TermStream(trunc, candidates)


class Evaluator:
    """Walks an AST produced by :func:`parse` and returns library values."""

    def __init__(self) -> None:
        self.env: dict[str, Any] = {}

    def __call__(self, node: Any) -> Any:
        return _settle(self.eval(node))

    def eval(self, node: Any) -> Any:
        method = getattr(self, "_" + type(node).__name__.lower())
        return method(node)

    def _num(self, node: Num) -> Any:
        return node.value

    def _name(self, node: Name) -> Any:
        if node.name in self.env:
            return self.env[node.name]
        if node.name == "w":
            return OMEGA
        if node.name == "x":
            return ts_monomial(1, 0, 1)
        if node.name == "e":
            return E
        if node.name == "pi":
            return PI
        raise UnsupportedFragmentError(f"unknown name {node.name!r}")

    def _neg(self, node: Neg) -> Any:
        v = self(node.operand)
        return -v

    def _binop(self, node: BinOp) -> Any:
        return _arith(node.op, self(node.left), self(node.right))

    def _pow(self, node: Pow) -> Any:
        return _power(self(node.base), self(node.exponent))

    def _factorial(self, node: Factorial) -> Any:
        n = _rational(self(node.operand), "factorial argument")
        if n.denominator != 1 or n < 0:
            raise DomainError("factorial needs a non-negative integer")
        return Fraction(math.factorial(int(n)))

    def _sum(self, node: Sum) -> Any:
        start = _rational(self(node.start), "summation start")
        if start.denominator != 1:
            raise DomainError("summation start must be an integer")
        saved = self.env.get(node.var)

        def term_at(k: int) -> Any:
            self.env[node.var] = Fraction(k)
            try:
                return self(node.body)
            finally:
                if saved is None:
                    self.env.pop(node.var, None)
                else:
                    self.env[node.var] = saved

        return _series_sum(term_at, int(start))

    def _bracket(self, node: Bracket) -> Any:
        left = [self._option(n, NEG_INF) for n in node.left]
        right = [self._option(n, POS_INF) for n in node.right]
        return resolve_bracket(GeneticBracket(left, right))

    def _option(self, node: Any, marker: Any) -> Any:
        if isinstance(node, Name) and node.name == "inf" and marker is POS_INF:
            return POS_INF
        if isinstance(node, Neg) and isinstance(node.operand, Name) and node.operand.name == "inf" and marker is NEG_INF:
            return NEG_INF
        value = self(node)
        if isinstance(value, TermStream):
            raise UnsupportedFragmentError("bracket options must be finite normal forms")
        return value

    def _call(self, node: Call) -> Any:
        name, args = node.func, node.args
        if name == "integrate":
            if len(args) == 1:
                return ts_integrate(_to_ts(self(args[0])))
            if len(args) == 3:
                f = _to_ts(self(args[0]))
                return ts_definite_integral(f, self(args[1]), self(args[2]))
            raise ParseError("integrate takes 1 or 3 arguments", 1, 1)
        if len(args) != 1:
            raise ParseError(f"{name} takes one argument", 1, 1)
        arg = self(args[0])
        if name == "exp":
            return _exp(arg)
        if name == "ln":
            return _ln(arg)
        if name in ("ei", "ei1"):
            if isinstance(arg, Transseries):
                if arg != ts_monomial(1, 0, 1) and not _is_variable(arg):
                    raise UnsupportedFragmentError("ei of a transseries is available at x only")
                return ei_transseries()
            fn = genetic_ei if name == "ei" else genetic_ei1
            return fn(arg if isinstance(arg, SurrealNF) else as_scalar(arg))
        if name == "lngamma":
            if isinstance(arg, Transseries):
                return lngamma_at_omega()
            return lngamma_value_at(_infinite(arg))
        if name == "stirling":
            return stirling_at_omega(_infinite(arg)).stream()
        raise UnsupportedFragmentError(f"unknown function {name!r}")


def _is_variable(t: Transseries) -> bool:
    terms = t.finite_terms()
    return terms == {TMono(0, 1, 0): Fraction(1)}


def _infinite(v: Any) -> SurrealNF:
    if isinstance(v, SurrealNF) and v.terms and not v.is_real():
        return v
    raise UnsupportedFragmentError("this expansion is evaluated at positive infinite points only")


def evaluate(text: str) -> Any:
    return Evaluator()(parse(text))


# --------------------------------------------------------------------------
# rendering


def _interval_text(v: EiInterval, digits: int) -> str:
    with mpmath.workdps(max(digits + 5, 20)):
        return f"{mpmath.nstr(to_mpf(v.midpoint), digits)} +/- {mpmath.nstr(v.radius, 3)}"


def render(value: Any, truncate: int = 8, digits: int = 17) -> str:
    value = _settle(value)
    if isinstance(value, EiInterval):
        return _interval_text(value, digits)
    if isinstance(value, Ball):
        return format_scalar(value, digits=digits)
    if isinstance(value, SurrealNF) and len(value.terms) > truncate:
        return render_value(value.stream(), truncate)
    return render_value(value, truncate)


def to_json(value: Any, source: str = "", truncate: int = 8, digits: int = 17) -> dict:
    value = _settle(value)
    out: dict[str, Any] = {"input": source, "text": render(value, truncate, digits)}
    if isinstance(value, EiInterval):
        out.update(kind="interval", midpoint=_interval_text(value, digits).split(" +/- ")[0], radius=mpmath.nstr(value.radius, 6))
        return out
    if _is_scalar(value):
        out.update(kind="scalar", terms=[{"monomial": "1", "coeff": format_scalar(value, digits=digits)}], tail=None)
        return out
    if isinstance(value, SurrealNF):
        value = value.stream()
    items, tail = value.take(truncate)
    is_ts = isinstance(value, Transseries)
    show = render_tmono if is_ts else render_mono
    terms = []
    for m, c in items:
        entry = {"monomial": show(m), "coeff": format_scalar(c, digits=digits)}
        if is_ts:
            entry.update(weight=format_scalar(m.weight), power=str(m.power), log=m.log)
        terms.append(entry)
    out.update(kind="transseries" if is_ts else "surreal", terms=terms, tail=None if tail is None else show(tail))
    return out


# --------------------------------------------------------------------------
# subcommands


def _emit(args: argparse.Namespace, value: Any, source: str) -> None:
    if args.format == "json":
        print(json.dumps(to_json(value, source, args.truncate, args.float_digits)))
    else:
        print(render(value, args.truncate, args.float_digits))


def cmd_eval(args: argparse.Namespace) -> int:
    _emit(args, evaluate(args.expr), args.expr)
    return EXIT_OK


def cmd_bracket(args: argparse.Namespace) -> int:
    node = parse(args.expr)
    if not isinstance(node, Bracket):
        raise ParseError("expected a bracket {L|R}", 1, 1)
    _emit(args, Evaluator()(node), args.expr)
    return EXIT_OK


def cmd_ei(args: argparse.Namespace) -> int:
    x = evaluate(args.x)
    value = genetic_ei(x if isinstance(x, SurrealNF) else as_scalar(x), Fraction(args.constant))
    _emit(args, value, args.x)
    return EXIT_OK


def _coefficient_series(text: str) -> FormalPowerSeries:
    """A comma list of numbers, or an expression in ``k``."""
    if "," in text:
        values = [_rational(evaluate(p), "coefficient") for p in text.split(",")]
        return FormalPowerSeries(values, plane="x")
    node = parse(text)
    ev = Evaluator()

    def coeff(k: int) -> Fraction:
        ev.env["k"] = Fraction(k)
        return _rational(ev(node), "coefficient")

    return FormalPowerSeries(coeff, plane="x")


def _points(text: str) -> list[Fraction]:
    if ":" in text:
        lo, hi, step = (Fraction(p) for p in text.split(":"))
        out, x = [], lo
        while x <= hi:
            out.append(x)
            x += step
        return out
    return [Fraction(p) for p in text.split(",")]


def cmd_borel(args: argparse.Namespace) -> int:
    series = _coefficient_series(args.coeffs)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["x", "value", "error_bound"])
    for x in _points(args.at):
        if args.method == "least-term":
            value, last = least_term_sum(series, Fraction(args.rho), x)
            gap = abs(series.coeff(last + 1) * x ** (-last - 2))
            writer.writerow([format_scalar(x), f"{float(value):.{args.float_digits}g}", f"{float(gap):.3g}"])
        else:
            ball = borel_sum(series, float(x), order=args.order, method=args.method, tol=args.tol)
            writer.writerow([format_scalar(x), f"{ball.mid:.{args.float_digits}g}", f"{ball.rad:.3g}"])
    return EXIT_OK


def cmd_special(args: argparse.Namespace) -> int:
    n = args.terms
    if args.which == "stirling":
        coeffs = stirling_coefficients(n)
        if args.format == "json":
            print(json.dumps({"name": "stirling", "scale": "sqrt(2*pi)*exp(w*ln(w) - w)*w^(-1/2)",
                              "coefficients": [{"power": -k, "coeff": format_scalar(c)} for k, c in enumerate(coeffs)]}))
        else:
            print(render_value(stirling_at_omega().stream(), n))
        return EXIT_OK
    if args.which == "ei-at-omega":
        value: Any = genetic_ei(OMEGA)
    elif args.which == "lngamma":
        value = lngamma_at_omega()
    else:
        from .special import erfi_transseries

        value = erfi_transseries()
    args.truncate = n
    _emit(args, value, args.which)
    return EXIT_OK


_SELFTEST = [
    ("{0|1}", "1/2"),
    ("{1|}", "2"),
    ("{-1/2|-1/4}", "-3/8"),
    ("integrate(exp(x),0,w)", "exp(w) - 1"),
    ("w^(1/2)+3", "w^(1/2) + 3"),
]


def cmd_selftest(args: argparse.Namespace) -> int:
    failures = 0
    for text, expected in _SELFTEST:
        got = render(evaluate(text))
        ok = got == expected
        failures += not ok
        print(f"{'ok  ' if ok else 'FAIL'} {text} -> {got}" + ("" if ok else f" (expected {expected})"))
    got = render(evaluate("ei(w)"), truncate=3)
    expected = "exp(w)*(w^-1 + w^-2 + 2*w^-3) + O(w^-4*exp(w))"
    ok = got == expected
    failures += not ok
    print(f"{'ok  ' if ok else 'FAIL'} ei(w) -> {got}")
    coeffs = stirling_coefficients(5)
    ok = coeffs == [1, Fraction(1, 12), Fraction(1, 288), Fraction(-139, 51840), Fraction(-571, 2488320)]
    failures += not ok
    print(f"{'ok  ' if ok else 'FAIL'} stirling coefficients -> {', '.join(map(format_scalar, coeffs))}")
    return EXIT_OK if failures == 0 else EXIT_OTHER


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conway", description="Exact surreal and transseries calculator.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--truncate", type=int, default=8, help="number of terms to print before the O(...) tail")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--float-digits", type=int, default=17)
    common.add_argument("--tol", type=float, default=1e-10)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate an expression")
    p.add_argument("expr")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bracket", parents=[common], help="resolve a bracket {L|R}")
    p.add_argument("expr")
    p.set_defaults(func=cmd_bracket)

    p = sub.add_parser("ei", parents=[common], help="Ei by its least-term bracket")
    p.add_argument("x")
    p.add_argument("--constant", default="3.55")
    p.set_defaults(func=cmd_ei)

    p = sub.add_parser("borel", parents=[common], help="numeric summation of a series sum c_k x^(-k-1)")
    bsub = p.add_subparsers(dest="action", required=True)
    s = bsub.add_parser("sum", parents=[common])
    s.add_argument("--coeffs", required=True, help="comma list, or an expression in k such as 'k!'")
    s.add_argument("--at", required=True, help="comma list or lo:hi:step")
    s.add_argument("--method", choices=("pade", "least-term", "pv"), default="pade")
    s.add_argument("--order", type=int, default=12)
    s.add_argument("--rho", default="1")
    s.set_defaults(func=cmd_borel)

    p = sub.add_parser("special", parents=[common], help="named expansions")
    p.add_argument("which", choices=("ei-at-omega", "stirling", "lngamma", "erfi"))
    p.add_argument("--terms", type=int, default=6)
    p.set_defaults(func=cmd_special)

    p = sub.add_parser("selftest", parents=[common], help="run a few built-in checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NeedsMoreTermsError as exc:
        print(f"needs more terms: {exc}", file=sys.stderr)
        return EXIT_NEEDS_MORE_TERMS
    except ResourceError as exc:
        print(f"resource cap exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except UnsupportedFragmentError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ConwayError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
