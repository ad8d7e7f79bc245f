from hypothesis import given, settings, strategies as st
import pytest

from conftest import CORPUS
from gen import random_term
from revad.core import REAL, Arr, Binary, Context, Let, Prod, Reduce, Tuple, Var, alpha_equal
from revad.errors import SyntaxError_
from revad.syntax import (
    normalize_ws, parse_program, parse_term, parse_type, parse_values, pragma_extensions,
    print_program, print_term,
)
from revad.values import ArrayV


def test_parse_intro():
    ctx, e = parse_program("ctx x1:real, x2:real, x3:real; let w1 = x1*x2 in let w2 = w1*x1 in w2")
    assert ctx.names == ("x1", "x2", "x3")
    assert e == Let("w1", Binary("*", Var("x1"), Var("x2")),
                    Let("w2", Binary("*", Var("w1"), Var("x1")), Var("w2")))


def test_parse_prod():
    ctx, e = parse_program("ctx A:real^4; reduce (x y. x*y) 1 A")
    assert ctx.lookup("A") == Arr(4)
    assert isinstance(e, Reduce) and e.init.value == 1.0


def test_empty_body_is_a_syntax_error():
    with pytest.raises(SyntaxError_):
        parse_program("ctx ;")


def test_syntax_error_has_position():
    with pytest.raises(SyntaxError_) as info:
        parse_program("ctx x : real;\nx + * 2")
    assert "2:" in str(info.value)


def test_precedence():
    e = parse_term("a + b * c - d / e")
    assert print_term(e) == "a + b * c - d / e"
    assert parse_term("(a + b) * c") == Binary("*", Binary("+", Var("a"), Var("b")), Var("c"))


def test_tuple_printing():
    assert print_term(Tuple((Var("a"), Var("b"), Var("c")))) == "<a, b, c>"


def test_types():
    assert parse_type("real") == REAL
    assert parse_type("real^7") == Arr(7)
    assert parse_type("real * real^2") == Prod((REAL, Arr(2)))


def test_values_file():
    vals = parse_values("x = 1.5\nA = [1, 2.5]\np = <1, 2>\n")
    assert vals["x"] == 1.5
    assert vals["A"] == ArrayV((1.0, 2.5)) and isinstance(vals["A"], ArrayV)
    assert vals["p"] == (1.0, 2.0)


def test_array_literals_rejected_in_programs():
    with pytest.raises(SyntaxError_):
        parse_program("ctx x : real; reduce (a b. a + b) 0 [1, 2]")


def test_pragma():
    assert pragma_extensions("# ext: cond, foldl\nctx x : real; x") == ("cond", "foldl")
    assert pragma_extensions("ctx x : real; x") == ()


@pytest.mark.parametrize("prog", CORPUS, ids=lambda p: p.name)
def test_corpus_round_trip(prog):
    text = print_program(prog.ctx, prog.term)
    ctx2, e2 = parse_program(text)
    assert ctx2 == prog.ctx
    assert alpha_equal(e2, prog.term)
    assert print_program(ctx2, e2) == text


@pytest.mark.parametrize("prog", CORPUS, ids=lambda p: p.name)
def test_print_of_parse_matches_source_modulo_whitespace(prog):
    body = prog.path.read_text().split(";", 1)[1]
    assert normalize_ws(print_term(prog.term)) == normalize_ws(print_term(parse_term(body, target=False)))


def test_target_lambda_printing():
    ctx = Context.of(("x", REAL))
    from revad.reverse import DiffConfig, diff

    out = print_term(diff(DiffConfig(ctx, REAL), Var("x")))
    assert out.startswith("<x, fun (")


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_random_round_trip(seed):
    e = random_term(seed)
    text = print_term(e)
    back = parse_term(text, target=False)
    assert alpha_equal(back, e)
    assert print_term(back) == text
