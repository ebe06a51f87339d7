from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from conway_analysis.errors import ParseError
from conway_analysis.syntax import (
    BinOp,
    Bracket,
    Call,
    Factorial,
    Name,
    Neg,
    Num,
    Pow,
    Sum,
    parse,
    render_ast,
    tokenize,
)

from helpers import EXPRESSION_CORPUS


def test_parse_examples():
    assert parse("w^(1/2)+3") == BinOp("+", Pow(Name("w"), BinOp("/", Num(F(1)), Num(F(2)))), Num(F(3)))
    assert parse("{0|1}") == Bracket((Num(F(0)),), (Num(F(1)),))
    assert parse("integrate(exp(x),0,w)") == Call("integrate", (Call("exp", (Name("x"),)), Num(F(0)), Name("w")))


def test_precedence():
    assert parse("-w^2") == Neg(Pow(Name("w"), Num(F(2))))
    assert parse("2^3^2") == Pow(Num(F(2)), Pow(Num(F(3)), Num(F(2))))
    assert parse("w^-1") == Pow(Name("w"), Neg(Num(F(1))))
    assert parse("1-2-3") == BinOp("-", BinOp("-", Num(F(1)), Num(F(2))), Num(F(3)))
    assert parse("a*b+c/d") == BinOp("+", BinOp("*", Name("a"), Name("b")), BinOp("/", Name("c"), Name("d")))
    assert parse("k!^2") == Pow(Factorial(Name("k")), Num(F(2)))


def test_sum_and_brackets():
    node = parse("sum(k>=1) w^-k")
    assert node == Sum("k", Num(F(1)), Pow(Name("w"), Neg(Name("k"))))
    assert parse("{|}") == Bracket((), ())
    assert parse("{1, 2 | w}") == Bracket((Num(F(1)), Num(F(2))), (Name("w"),))


def test_decimal_literals_are_exact():
    assert parse("0.1") == Num(F(1, 10))
    assert parse("2.5e-3") == Num(F(1, 400))


@pytest.mark.parametrize(
    "text, line, col",
    [("(1+", 1, 4), ("1 $ 2", 1, 3), ("1+\n)", 2, 1), ("", 1, 1), ("{1|2", 1, 5), ("f(1,", 1, 5)],
)
def test_errors_carry_position(text, line, col):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert (info.value.line, info.value.col) == (line, col)


def test_tokenizer_positions():
    toks = tokenize("w +\n  3")
    assert [(t.text, t.line, t.col) for t in toks] == [("w", 1, 1), ("+", 1, 3), ("3", 2, 3), ("", 2, 4)]


@pytest.mark.parametrize("text", EXPRESSION_CORPUS)
def test_round_trip_on_corpus(text):
    tree = parse(text)
    printed = render_ast(tree)
    assert parse(printed) == tree
    assert render_ast(parse(printed)) == printed


names = st.sampled_from(["w", "x", "k", "e", "pi", "foo"])
leaves = st.one_of(st.integers(0, 50).map(lambda n: Num(F(n))), names.map(Name))


def _extend(children):
    return st.one_of(
        children.map(Neg),
        children.map(Factorial),
        st.tuples(st.sampled_from("+-*/"), children, children).map(lambda t: BinOp(*t)),
        st.tuples(children, children).map(lambda t: Pow(*t)),
        st.tuples(st.sampled_from(["exp", "ln", "ei"]), st.lists(children, min_size=1, max_size=3)).map(
            lambda t: Call(t[0], tuple(t[1]))
        ),
        st.tuples(st.lists(children, max_size=2), st.lists(children, max_size=2)).map(
            lambda t: Bracket(tuple(t[0]), tuple(t[1]))
        ),
        st.tuples(st.sampled_from(["k", "j"]), children, children).map(lambda t: Sum(*t)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


@given(trees)
def test_print_parse_round_trip(tree):
    assert parse(render_ast(tree)) == tree
