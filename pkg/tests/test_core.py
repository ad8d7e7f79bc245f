from hypothesis import given, settings, strategies as st
import pytest

from gen import CTX, random_term
from revad.core import (
    BOOL, REAL, Arr, Binary, Const, Context, Fun, Lambda, Let, NameSupply, Prod, Var,
    alpha_equal, free_vars, is_ground, rename_bound, substitute,
)
from revad.errors import (
    ArityMismatch, ArraySizeMismatch, IllegalFreeVariableInReduce, TypeMismatch, UnboundVariable,
)
from revad.syntax import parse_program, parse_term
from revad.typecheck import typecheck_source, typecheck_target


def src(text):
    return parse_program(text)


def test_typecheck_intro_term():
    ctx, e = src("ctx x1 : real, x2 : real, x3 : real; let w1 = x1 * x2 in let w2 = w1 * x1 in w2")
    assert typecheck_source(ctx, e) == REAL


def test_typecheck_constant_in_empty_context():
    assert typecheck_source(Context(), Const(1.0)) == REAL


def test_typecheck_prod():
    ctx, e = src("ctx A : real^5; reduce (x y. x * y) 1 A")
    assert typecheck_source(ctx, e) == REAL


def test_typecheck_scanl_grows_array():
    ctx = Context.of(("A", Arr(3)))
    assert typecheck_target(ctx, parse_term("scanl (x y. x * y) 1 A")) == Arr(4)


def test_shift_on_empty_array():
    ctx = Context.of(("A", Arr(0)))
    assert typecheck_target(ctx, parse_term("shift1L A")) == Arr(0)
    assert typecheck_target(ctx, parse_term("shift1R A")) == Arr(0)


def test_shift_drops_one():
    ctx = Context.of(("A", Arr(4)))
    assert typecheck_target(ctx, parse_term("shift1L A")) == Arr(3)


def test_typecheck_lambda():
    lam = Lambda(("y1", "y2"), Var("y1"), (REAL, REAL))
    assert typecheck_target(Context(), lam) == Fun((REAL, REAL), REAL)


@pytest.mark.parametrize("text, err", [
    ("ctx x : real; y", UnboundVariable),
    ("ctx A : real^3, B : real^4; reduce (x y. x + y) 0 (map2 (a b. a * b) A B)", ArraySizeMismatch),
    ("ctx A : real^3, c : real; reduce (x y. x + c * y) 0 A", IllegalFreeVariableInReduce),
    ("ctx x : real; fst x", TypeMismatch),
    ("ctx A : real^3; A + 1", TypeMismatch),
])
def test_typecheck_errors(text, err):
    ctx, e = src(text)
    with pytest.raises(err):
        typecheck_source(ctx, e)


def test_apply_arity_mismatch():
    from revad.core import Apply

    t = Apply(Lambda(("a", "b"), Var("a"), (REAL, REAL)), (Const(1.0),))
    with pytest.raises(ArityMismatch):
        typecheck_target(Context(), t)


def test_is_ground():
    assert is_ground(REAL)
    assert is_ground(Arr(3))
    assert is_ground(Prod((REAL, Arr(2), Prod((REAL, REAL)))))
    assert not is_ground(Fun((REAL,), REAL))
    assert not is_ground(Prod((REAL, Fun((REAL,), REAL))))
    assert not is_ground(BOOL)


def test_substitute_simple():
    e = parse_term("x + y")
    assert substitute(e, "x", Const(3.0)) == Binary("+", Const(3.0), Var("y"))


def test_substitute_respects_shadowing():
    e = parse_term("let x = 1 in x + y")
    assert substitute(e, "x", Const(5.0)) == e


def test_substitute_avoids_capture():
    e = parse_term("fun (y) -> x * y")
    out = substitute(e, "x", Var("y"))
    assert isinstance(out, Lambda)
    (p,) = out.params
    assert p != "y"
    assert out.body == Binary("*", Var("y"), Var(p))


def test_free_vars():
    assert free_vars(parse_term("let x = y in x")) == {"y"}
    assert free_vars(parse_term("map2 (a b. a * c) A B")) == {"c", "A", "B"}


def test_alpha_equal_basics():
    assert alpha_equal(parse_term("fun (a) -> a"), parse_term("fun (b) -> b"))
    assert not alpha_equal(Var("x"), Var("y"))
    assert not alpha_equal(parse_term("fun (a, b) -> a"), parse_term("fun (a, b) -> b"))
    assert alpha_equal(parse_term("let u = x in u * u"), parse_term("let v = x in v * v"))


def test_name_supply_is_deterministic():
    s1, s2 = NameSupply({"a1"}), NameSupply({"a1"})
    assert [s1.fresh("a") for _ in range(3)] == [s2.fresh("a") for _ in range(3)]
    assert "a1" not in [NameSupply({"a1"}).fresh("a") for _ in range(3)]


def test_context_positions():
    ctx = Context.of(("x", REAL), ("A", Arr(2)))
    assert ctx.pos("A") == 2
    assert ctx.extend("z", REAL).names == ("x", "A", "z")
    with pytest.raises(ValueError):
        Context.of(("x", REAL), ("x", REAL))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_rename_bound_is_alpha_equal(seed):
    e = random_term(seed)
    r = rename_bound(e)
    assert alpha_equal(e, r)
    assert alpha_equal(r, e)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_alpha_equal_implies_same_free_vars(s1, s2):
    a, b = random_term(s1), random_term(s2)
    if alpha_equal(a, b):
        assert free_vars(a) == free_vars(b)
    assert alpha_equal(a, a)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_substitution_preserves_typing(seed):
    e = random_term(seed)
    t = typecheck_source(CTX, e)
    replaced = substitute(e, "x", Binary("*", Var("y"), Const(2.0)))
    assert typecheck_source(CTX, replaced) == t


def test_let_binding_in_substitute_target_lambda_body():
    e = Let("k", Lambda(("a",), Binary("*", Var("a"), Var("x")), (REAL,)), Var("k"))
    out = substitute(e, "x", Var("a"))
    assert free_vars(out) == {"a"}
