import random

from hypothesis import given, settings, strategies as st
import pytest

from conftest import CORPUS
from gen import CTX, random_point, random_term
from revad.core import (
    REAL, Arr, Const, Context, Fun, Lambda, Map, NameSupply, Prod, TVar, Tuple, Var, alpha_equal,
    tuple_type,
)
from revad.errors import IndexOutOfRange, NotScalarOutput, UnknownVariable
from revad.evaluator import eval_gradient_entry, eval_term
from revad.gradcheck import finite_diff_gradient, max_rel_error
from revad.optimizer import check_linear_continuations, contains_lambda, optimize, partial_evaluate
from revad.reverse import (
    DiffConfig, diff, diff_type, gradient, hat_add, inject_at, nabla_sub, zero_of,
)
from revad.syntax import parse_term
from revad.typecheck import typecheck_target
from revad.values import ArrayV


def src(text):
    return parse_term(text, target=False)


X12 = Context.of(("x1", REAL), ("x2", REAL))


def test_constant_clause():
    out = diff(DiffConfig(X12, TVar()), Const(2.0))
    assert alpha_equal(out, parse_term("<2, fun (a, b, z) -> Y(a, b)>"))


def test_variable_clause():
    out = diff(DiffConfig(X12, TVar()), Var("x2"))
    assert alpha_equal(out, parse_term("<x2, fun (a, b, z) -> Y(a, b + z)>"))


def test_inject_at():
    c3 = Context.of(("a", REAL), ("b", REAL), ("c", REAL))
    assert inject_at(c3, 2, Var("z")) == Tuple((Const(0.0), Var("z"), Const(0.0)))
    assert inject_at(Context.of(("a", REAL)), 1, Var("z")) == Tuple((Var("z"),))
    mixed = Context.of(("A", Arr(2)), ("b", REAL))
    assert inject_at(mixed, 1, Var("Z")) == Tuple((Var("Z"), Const(0.0)))
    zero_array = inject_at(mixed, 2, Var("z")).items[0]
    assert isinstance(zero_array, Map) and zero_array.body == Const(0.0)


def test_inject_at_out_of_range():
    with pytest.raises(IndexOutOfRange):
        inject_at(X12, 3, Var("z"))


def test_nabla_sub_bilinear():
    ctx = Context.of(("x", REAL), ("y", REAL))
    e = src("x * y")
    assert optimize(nabla_sub(ctx, ["x"], e)) == Var("y")
    assert optimize(nabla_sub(ctx, ["y"], e)) == Var("x")
    assert optimize(nabla_sub(ctx, ["x", "y"], e)) == Tuple((Var("y"), Var("x")))
    with pytest.raises(UnknownVariable):
        nabla_sub(ctx, ["q"], e)


def test_gradient_needs_scalar_output():
    with pytest.raises(NotScalarOutput):
        gradient(X12, src("<x1, x2>"))


def test_gradient_of_constant_is_zero():
    ctx = Context.of(("x", REAL), ("A", Arr(3)))
    g = gradient(ctx, Const(3.5))
    assert eval_gradient_entry(ctx, g, [0.7, ArrayV((1.0, 2.0, 3.0))]) == (0.0, ArrayV((0.0,) * 3))


def test_prod_gradient_values():
    ctx = Context.of(("A", Arr(3)))
    g = gradient(ctx, src("reduce (x y. x * y) 1 A"))
    assert eval_gradient_entry(ctx, g, [ArrayV((2.0, 3.0, 4.0))]) == (ArrayV((12.0, 8.0, 6.0)),)


def test_reduce_suffix_chain_three_elements():
    # A3 holds the products of later d/dx factors: [d2 * d3, d3, 1]
    ctx = Context.of(("A", Arr(3)))
    g = partial_evaluate(gradient(ctx, src("reduce (x y. x * y + y) 0 A")))
    a = [0.5, -1.5, 2.0]
    v = [0.0]
    for y in a:
        v.append(v[-1] * y + y)
    dx = [a[1], a[2]]  # d/dx (x*y + y) = y at steps 2 and 3
    dy = [v[k] + 1 for k in range(3)]
    expected = (dy[0] * dx[0] * dx[1], dy[1] * dx[1], dy[2])
    (got,) = eval_gradient_entry(ctx, g, [ArrayV(a)])
    assert got == pytest.approx(expected, rel=1e-12)


def test_intro_gradient_optimized():
    ctx = Context.of(("x1", REAL), ("x2", REAL), ("x3", REAL))
    e = src("let w1 = x1 * x2 in let w2 = w1 * x1 in w2")
    g = optimize(gradient(ctx, e), "all")
    assert eval_gradient_entry(ctx, g, [3.0, 5.0, 7.0]) == (30.0, 9.0, 0.0)


def test_diff_type_on_intro():
    ctx = Context.of(("x1", REAL), ("x2", REAL), ("x3", REAL))
    e = src("let w1 = x1 * x2 in let w2 = w1 * x1 in w2")
    rho = tuple_type(ctx.types)
    cfg = DiffConfig(ctx, rho)
    out = diff(cfg, e)
    full = ctx.extend("Y", Fun(ctx.types, rho))
    assert typecheck_target(full, out) == diff_type(cfg, e)
    assert diff_type(cfg, e) == Prod((REAL, Fun(ctx.types + (REAL,), rho)))


def test_non_linear_use_detected():
    lam = Lambda(("a",), parse_term("Y(a) + Y(a)"), (REAL,))
    assert not check_linear_continuations(lam, Context.of(("Y", Fun((REAL,), REAL))))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**7))
def test_typing_and_linearity_on_random_terms(seed):
    e = random_term(seed)
    rho = tuple_type(CTX.types)
    cfg = DiffConfig(CTX, rho)
    out = diff(cfg, e)
    full = CTX.extend("Y", Fun(CTX.types, rho))
    assert typecheck_target(full, out) == diff_type(cfg, e)
    assert check_linear_continuations(out, full)
    g = partial_evaluate(gradient(CTX, e))
    assert not contains_lambda(g)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**7))
def test_random_gradients_match_finite_differences(seed):
    e = random_term(seed)
    pt = random_point(seed)
    g = partial_evaluate(gradient(CTX, e))
    _, ok = max_rel_error(eval_gradient_entry(CTX, g, pt), finite_diff_gradient(CTX, e, pt))
    assert ok


GROUND = [REAL, Arr(3), Prod((REAL, Arr(2))), Prod((Arr(2), Prod((REAL, REAL))))]


def _random_value(t, rng):
    if t == REAL:
        return rng.uniform(-3, 3)
    if isinstance(t, Arr):
        return ArrayV(rng.uniform(-3, 3) for _ in range(t.size))
    return tuple(_random_value(s, rng) for s in t.items)


@pytest.mark.parametrize("t", GROUND, ids=str)
def test_ground_monoid_laws(t):
    rng = random.Random(11)
    s = NameSupply({"a", "b", "c"})
    for _ in range(10):
        env = {n: _random_value(t, rng) for n in "abc"}
        a, b, c = Var("a"), Var("b"), Var("c")
        assert eval_term(env, hat_add(t, a, zero_of(t, a, s), s)) == env["a"]
        assert eval_term(env, hat_add(t, zero_of(t, a, s), a, s)) == env["a"]
        left = hat_add(t, hat_add(t, a, b, s), c, s)
        right = hat_add(t, a, hat_add(t, b, c, s), s)
        lv, rv = eval_term(env, left), eval_term(env, right)
        assert _flat(lv) == pytest.approx(_flat(rv), rel=1e-12)


def _flat(v):
    from revad.values import flatten

    return flatten(v)


@pytest.mark.parametrize("prog", [p for p in CORPUS if p.values], ids=lambda p: p.name)
def test_corpus_gradient_at_value_file(prog):
    g = partial_evaluate(gradient(prog.ctx, prog.term, prog.extensions))
    ad = eval_gradient_entry(prog.ctx, g, prog.point)
    fd = finite_diff_gradient(prog.ctx, prog.term, prog.point, extensions=prog.extensions)
    assert max_rel_error(ad, fd)[1]
