"""Text syntax: tokenizer, recursive-descent parser, AST printer and value renderer.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | 'sum' '(' NAME '>=' expr ')' term | power
    power   := postfix ('^' unary)?
    postfix := atom '!'*
    atom    := NUMBER | NAME | NAME '(' args ')' | '(' expr ')' | '{' list '|' list '}'

``w`` is omega and ``x`` the transseries variable.  Exponentiation binds
tighter than unary minus, so ``-w^2`` is ``-(w^2)`` and ``w^-1`` is allowed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Union

from .errors import ParseError
from .scalar import Ball, Scalar, Sym, format_scalar, needs_parens, sign

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: Fraction
    text: str = field(default="", compare=False)


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: "Node"


@dataclass(frozen=True)
class Factorial:
    operand: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]


@dataclass(frozen=True)
class Bracket:
    left: tuple["Node", ...]
    right: tuple["Node", ...]


@dataclass(frozen=True)
class Sum:
    var: str
    start: "Node"
    body: "Node"


Node = Union[Num, Name, Neg, BinOp, Pow, Factorial, Call, Bracket, Sum]

# ---------------------------------------------------------------------------
# tokenizer

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>>=|[-+*/^!(){}|,])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source: str) -> None:
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.tok.line, self.tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op", "name") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def parse(self) -> Node:
        if self.tok.kind == "eof":
            raise self.error("empty expression")
        node = self.expr()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.accept("-"):
            return Neg(self.unary())
        if self.tok.kind == "name" and self.tok.text == "sum" and self.tokens[self.i + 1].text == "(":
            self.i += 2
            if self.tok.kind != "name":
                raise self.error("expected a summation index")
            var = self.tok.text
            self.i += 1
            self.expect(">=")
            start = self.expr()
            self.expect(")")
            return Sum(var, start, self.term())
        return self.power()

    def power(self) -> Node:
        base = self.postfix()
        if self.accept("^"):
            return Pow(base, self.unary())
        return base

    def postfix(self) -> Node:
        node = self.atom()
        while self.accept("!"):
            node = Factorial(node)
        return node

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            try:
                value = Fraction(tok.text)
            except ValueError as exc:  # pragma: no cover - regex guarantees format
                raise self.error(str(exc)) from exc
            return Num(value, tok.text)
        if tok.kind == "name":
            self.i += 1
            if self.accept("("):
                args: list[Node] = []
                if not self.accept(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                    self.expect(")")
                return Call(tok.text, tuple(args))
            return Name(tok.text)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        if self.accept("{"):
            left = self.option_list("|")
            self.expect("|")
            right = self.option_list("}")
            self.expect("}")
            return Bracket(tuple(left), tuple(right))
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")

    def option_list(self, closer: str) -> list[Node]:
        items: list[Node] = []
        if self.tok.kind == "op" and self.tok.text == closer:
            return items
        items.append(self.expr())
        while self.accept(","):
            items.append(self.expr())
        return items


def parse(source: str) -> Node:
    """Parse text into an AST; raises ParseError with line and column."""
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# AST printer (fully parenthesised where needed so that parse(print(t)) == t)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, (Neg, Sum)):
        return 3
    if isinstance(node, Pow):
        return 4
    if isinstance(node, Factorial):
        return 5
    return 6


def render_ast(node: Node) -> str:
    if isinstance(node, Num):
        if node.text:
            return node.text
        if node.value.denominator == 1:
            return str(node.value.numerator)
        return f"({node.value.numerator}/{node.value.denominator})"
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Neg):
        inner = render_ast(node.operand)
        return f"-{inner}" if _prec(node.operand) >= 3 else f"-({inner})"
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left = render_ast(node.left)
        if _prec(node.left) < p or isinstance(node.left, Sum):
            left = f"({left})"
        right = render_ast(node.right)
        if _prec(node.right) <= p or isinstance(node.right, Sum):
            right = f"({right})"
        return f"{left} {node.op} {right}"
    if isinstance(node, Pow):
        base = render_ast(node.base)
        if _prec(node.base) <= 4:
            base = f"({base})"
        exp = render_ast(node.exponent)
        if _prec(node.exponent) < 3 or isinstance(node.exponent, Sum):
            exp = f"({exp})"
        return f"{base}^{exp}"
    if isinstance(node, Factorial):
        inner = render_ast(node.operand)
        return f"({inner})!" if _prec(node.operand) < 6 else f"{inner}!"
    if isinstance(node, Call):
        return f"{node.func}(" + ", ".join(render_ast(a) for a in node.args) + ")"
    if isinstance(node, Bracket):
        left = ", ".join(render_ast(a) for a in node.left)
        right = ", ".join(render_ast(a) for a in node.right)
        return "{" + left + " | " + right + "}"
    if isinstance(node, Sum):
        body = render_ast(node.body)
        if _prec(node.body) < 2:
            body = f"({body})"
        return f"sum({node.var} >= {render_ast(node.start)}) {body}"
    raise TypeError(f"not an AST node: {node!r}")


# ---------------------------------------------------------------------------
# value rendering


def _render_exponent(value: Any, var: str) -> str:
    q = value if isinstance(value, Fraction) else None
    if q is None:
        from .surreal import SurrealNF, rational_value

        if isinstance(value, SurrealNF):
            q = rational_value(value)
    if q is not None:
        if q == 1:
            return var
        if q.denominator == 1:
            return f"{var}^{q.numerator}"
        return f"{var}^({q.numerator}/{q.denominator})"
    return f"{var}^({render_value(value)})"


def render_mono(mono: Any) -> str:
    """Render a surreal monomial ``e**E * w**y``."""
    parts = []
    if mono.power.terms:
        parts.append(_render_exponent(mono.power, "w"))
    if mono.expo.terms:
        parts.append(f"exp({render_value(mono.expo)})")
    return "*".join(parts) if parts else "1"


def render_tmono(mono: Any) -> str:
    """Render a transseries monomial ``x**p * exp(-w*x) * ln(x)**m``."""
    parts = []
    if mono.power:
        parts.append(_render_exponent(Fraction(mono.power), "x"))
    if not _is_zero_scalar(mono.weight):
        parts.append(f"exp({_render_weight(mono.weight)})")
    if mono.log:
        parts.append("ln(x)" if mono.log == 1 else f"ln(x)^{mono.log}" if mono.log > 0 else f"ln(x)^({mono.log})")
    return "*".join(parts) if parts else "1"


def _is_zero_scalar(c: Any) -> bool:
    return isinstance(c, (int, Fraction)) and c == 0


def _render_weight(weight: Scalar) -> str:
    neg = -weight
    if neg == 1:
        return "x"
    if neg == -1:
        return "-x"
    if isinstance(neg, Fraction):
        if neg < 0:
            return f"-{format_scalar(-neg)}*x"
        return f"{format_scalar(neg)}*x"
    return f"({format_scalar(neg)})*x"


def _split_sign(c: Scalar) -> tuple[bool, Scalar]:
    if isinstance(c, Fraction):
        return (c < 0, -c if c < 0 else c)
    if isinstance(c, Sym) and len(c.terms) == 1 and c.terms[0][1] < 0:
        return True, -c
    if isinstance(c, Ball) and c.mid < 0:
        return True, -c
    return False, c


def _render_term(mono_text: str, c: Scalar) -> tuple[bool, str]:
    negative, mag = _split_sign(c)
    if mono_text == "1":
        body = format_scalar(mag)
        if isinstance(mag, Ball):
            body = f"({body})"
    elif mag == 1:
        body = mono_text
    else:
        text = format_scalar(mag)
        body = f"({text})*{mono_text}" if needs_parens(mag) else f"{text}*{mono_text}"
    return negative, body


def _join(pieces: list[tuple[bool, str]]) -> str:
    out = []
    for k, (neg, body) in enumerate(pieces):
        if k == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out) if out else "0"


def render_terms(terms: list[tuple[Any, Scalar]], tail: Any | None = None) -> str:
    """Render decreasing terms, grouping runs that share an exponential factor."""
    from .surreal import Mono

    surreal = bool(terms) and isinstance(terms[0][0], Mono) or isinstance(tail, Mono)
    pieces: list[tuple[bool, str]] = []
    k = 0
    while k < len(terms):
        mono = terms[k][0]
        key = _exp_key(mono, surreal)
        j = k
        while j < len(terms) and _exp_key(terms[j][0], surreal) == key:
            j += 1
        if key is None or j - k == 1:
            for m, c in terms[k:j]:
                pieces.append(_render_term(render_mono(m) if surreal else render_tmono(m), c))
        else:
            inner = [_render_term(_strip_exp(m, surreal), c) for m, c in terms[k:j]]
            pieces.append((False, f"{_exp_text(mono, surreal)}*({_join(inner)})"))
        k = j
    text = _join(pieces) if pieces else ("0" if tail is None else "")
    if tail is not None:
        tail_text = render_mono(tail) if surreal else render_tmono(tail)
        text = f"O({tail_text})" if not pieces else f"{text} + O({tail_text})"
    return text


def _exp_key(mono: Any, surreal: bool) -> Any:
    if surreal:
        return mono.expo if mono.expo.terms else None
    return None if _is_zero_scalar(mono.weight) else mono.weight


def _exp_text(mono: Any, surreal: bool) -> str:
    if surreal:
        return f"exp({render_value(mono.expo)})"
    return f"exp({_render_weight(mono.weight)})"


def _strip_exp(mono: Any, surreal: bool) -> str:
    if surreal:
        from .surreal import Mono, ZERO

        return render_mono(Mono(mono.power, ZERO))
    from .transseries import TMono

    return render_tmono(TMono(Fraction(0), mono.power, mono.log))


def render_value(value: Any, truncate: int = 8) -> str:
    """Render a scalar, normal form, stream or transseries in the text syntax."""
    from .hahn import LazySeries
    from .surreal import SurrealNF

    if isinstance(value, (Fraction, Sym, Ball, int)):
        return format_scalar(value)
    if isinstance(value, SurrealNF):
        return render_terms(list(value.terms))
    if isinstance(value, LazySeries):
        terms, tail = value.take(truncate)
        return render_terms(terms, tail)
    return str(value)


__all__ = [
    "Bracket",
    "BinOp",
    "Call",
    "Factorial",
    "Name",
    "Neg",
    "Num",
    "Pow",
    "Sum",
    "parse",
    "render_ast",
    "render_mono",
    "render_terms",
    "render_value",
    "sign",
    "tokenize",
]
