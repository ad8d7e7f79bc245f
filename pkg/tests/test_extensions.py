import random

import pytest

from conftest import CORPUS
from revad.core import REAL, Arr, Context, Fun, NameSupply, Prod, Var, tuple_type
from revad.errors import IllegalFreeVariableInReduce, NonScalarBranches, UnsupportedConstruct
from revad.evaluator import eval_gradient_entry, eval_term
from revad.extensions import MulMonoid
from revad.gradcheck import check_gradient, semantic_equiv
from revad.optimizer import check_linear_continuations, contains_lambda, optimize, partial_evaluate
from revad.reverse import DiffConfig, diff, gradient
from revad.syntax import parse_program, parse_term
from revad.typecheck import typecheck_source
from revad.values import ArrayV

X = Context.of(("x", REAL))


def program(text):
    return parse_program(text)


def grad_at(ctx, e, ext, point, **kw):
    g = partial_evaluate(gradient(ctx, e, ext, **kw))
    return eval_gradient_entry(ctx, g, point)


# ---------------------------------------------------------------- reduce with an open body


OPEN = "ctx A : real^4, c : real; reduce (x y. x + c * y) 0 A"
OPEN_POINT = [ArrayV((1.0, 2.0, 3.0, 4.0)), 0.5]


def test_open_body_needs_the_extension():
    ctx, e = program(OPEN)
    with pytest.raises(IllegalFreeVariableInReduce):
        typecheck_source(ctx, e)
    assert typecheck_source(ctx, e, ("reduce-open",)) == REAL


def test_open_reduce_gradient():
    # f = c * sum(A): df/dc = sum(A) = 10, df/dA_i = c
    ctx, e = program(OPEN)
    dA, dc = grad_at(ctx, e, ("reduce-open",), OPEN_POINT)
    assert dc == 10.0 and dA == ArrayV((0.5,) * 4)


def test_uncorrected_chain_overcounts():
    ctx, e = program(OPEN)
    _, dc = grad_at(ctx, e, ("reduce-open",), OPEN_POINT, reduce_variant="uncorrected")
    assert dc == 65.0


def test_closed_body_matches_the_base_clause():
    ctx, e = program("ctx A : real^4; reduce (x y. x * y) 1 A")
    base = partial_evaluate(gradient(ctx, e))
    ext = partial_evaluate(gradient(ctx, e, ("reduce-open",)))
    assert semantic_equiv(base, ext, ctx, tol=0.0)


def test_open_reduce_is_linear():
    ctx, e = program(OPEN)
    rho = tuple_type(ctx.types)
    cfg = DiffConfig(ctx, rho, extensions=frozenset({"reduce-open"}))
    assert check_linear_continuations(diff(cfg, e), ctx.extend("Y", Fun(ctx.types, rho)))


# ---------------------------------------------------------------- conditionals


def test_branch_selected_gradient():
    ctx, e = program("ctx x : real; if true then x * x else x * x * x")
    assert grad_at(ctx, e, ("cond",), [2.0]) == (4.0,)
    ctx, e = program("ctx x : real; if false then x * x else x * x * x")
    assert grad_at(ctx, e, ("cond",), [2.0]) == (12.0,)


def test_predicate_branches():
    ctx, e = program("ctx x : real; if gt0 x then x * x else neg x")
    assert grad_at(ctx, e, ("cond",), [3.0]) == (6.0,)
    assert grad_at(ctx, e, ("cond",), [-3.0]) == (-1.0,)


def test_non_scalar_branches_are_rejected():
    ctx, e = program("ctx x : real; fst (if true then <x, x> else <x, x * x>)")
    with pytest.raises(NonScalarBranches):
        gradient(ctx, e, ("cond",))


def test_equal_branches_collapse_before_differentiation():
    ctx, e = program("ctx x : real; if gt0 x then x * x else x * x")
    assert optimize(e, "all") == parse_term("x * x")
    collapsed = partial_evaluate(gradient(ctx, optimize(e, "all")))
    full = partial_evaluate(gradient(ctx, e, ("cond",)))
    assert semantic_equiv(collapsed, full, ctx, tol=0.0)


def test_conditional_continuation_is_linear():
    ctx, e = program("ctx x : real, y : real; if gt0 x then x * y else y * y")
    rho = tuple_type(ctx.types)
    cfg = DiffConfig(ctx, rho, extensions=frozenset({"cond"}))
    assert check_linear_continuations(diff(cfg, e), ctx.extend("Y", Fun(ctx.types, rho)))


def test_cond_is_off_by_default():
    ctx, e = program("ctx x : real; if true then x else x")
    with pytest.raises(UnsupportedConstruct):
        gradient(ctx, e)


# ---------------------------------------------------------------- foldl and map


def test_linear_fold():
    ctx, e = program("ctx v : real, A : real^3; foldl (x y. x + y) v A")
    pt = [0.7, ArrayV((1.0, -2.0, 3.0))]
    assert grad_at(ctx, e, ("foldl",), pt) == (1.0, ArrayV((1.0, 1.0, 1.0)))


def test_product_fold():
    # f = v * 2 * 3
    ctx, e = program("ctx v : real, A : real^2; foldl (x y. x * y) v A")
    dv, dA = grad_at(ctx, e, ("foldl",), [1.5, ArrayV((2.0, 3.0))])
    assert dv == 6.0 and dA == ArrayV((4.5, 3.0))


def test_map_matches_map2_with_a_duplicated_argument():
    ctx, e1 = program("ctx A : real^4; reduce (x y. x + y) 0 (map (x. sin x) A)")
    _, e2 = program("ctx A : real^4; reduce (x y. x + y) 0 (map2 (x y. sin x) A A)")
    g1 = partial_evaluate(gradient(ctx, e1, ("foldl",)))
    g2 = partial_evaluate(gradient(ctx, e2))
    assert semantic_equiv(g1, g2, ctx, tol=0.0)


def test_unknown_extension():
    with pytest.raises(UnsupportedConstruct):
        gradient(X, Var("x"), ("loops",))


# ---------------------------------------------------------------- the multiplicative monoid


GROUND = [REAL, Arr(3), Prod((REAL, Arr(2)))]


def _value(t, rng):
    if t == REAL:
        return rng.uniform(-2, 2)
    if isinstance(t, Arr):
        return ArrayV(rng.uniform(-2, 2) for _ in range(t.size))
    return tuple(_value(s, rng) for s in t.items)


@pytest.mark.parametrize("t", GROUND, ids=str)
def test_mul_monoid_laws(t):
    from revad.values import flatten

    rng = random.Random(5)
    s = NameSupply({"a", "b", "c"})
    a, b, c = Var("a"), Var("b"), Var("c")
    one = MulMonoid.one_of(t, a, s)
    for _ in range(10):
        env = {n: _value(t, rng) for n in "abc"}
        assert eval_term(env, MulMonoid.hat_mul(t, a, one, s)) == env["a"]
        assert eval_term(env, MulMonoid.hat_mul(t, one, a, s)) == env["a"]
        left = MulMonoid.hat_mul(t, MulMonoid.hat_mul(t, a, b, s), c, s)
        right = MulMonoid.hat_mul(t, a, MulMonoid.hat_mul(t, b, c, s), s)
        assert flatten(eval_term(env, left)) == pytest.approx(flatten(eval_term(env, right)), rel=1e-12)


# ---------------------------------------------------------------- corpus programs using extensions


EXTENDED = [p for p in CORPUS if p.extensions]


def test_extension_corpus_is_present():
    assert {"reduce-open", "cond", "foldl"} <= {x for p in EXTENDED for x in p.extensions}


@pytest.mark.parametrize("prog", EXTENDED, ids=lambda p: p.name)
def test_extension_gradients_pass(prog):
    assert check_gradient(prog.ctx, prog.term, 20, seed=0, extensions=prog.extensions).passed


@pytest.mark.parametrize("prog", EXTENDED, ids=lambda p: p.name)
def test_extension_outputs_are_linear_and_lambda_free(prog):
    rho = tuple_type(prog.ctx.types)
    cfg = DiffConfig(prog.ctx, rho, extensions=frozenset(prog.extensions))
    full = prog.ctx.extend("Y", Fun(prog.ctx.types, rho))
    assert check_linear_continuations(diff(cfg, prog.term), full)
    assert not contains_lambda(partial_evaluate(gradient(prog.ctx, prog.term, prog.extensions)))
