import random

import pytest

from conftest import CORPUS, by_name
from gen import CTX, TermGen, random_point
from revad.core import (
    REAL, Apply, Binary, Const, Context, Fun, If, Lambda, Let, LetTuple, Map, Map2, NameSupply,
    Proj, Reduce, Tuple, Unary, Var, all_names, alpha_equal,
)
from revad.errors import FixpointBudgetExceeded
from revad.evaluator import eval_term
from revad.optimizer import (
    GROUPS, PE_GROUPS, RULES, RewriteState, RuleSet, check_linear_continuations, contains_lambda,
    optimize, partial_evaluate, rewrite_fixpoint,
)
from revad.reverse import DiffConfig, diff, gradient
from revad.syntax import parse_term
from revad.typecheck import typecheck_target

R = REAL
REALS, ARRAYS = ("x", "y"), ("A", "B")


# ---------------------------------------------------------------- per-rule instances


class Inst:
    """Builds one random left-hand side for a named rule."""

    def __init__(self, seed: int) -> None:
        self.g = TermGen(seed, max_depth=3)
        self.rng = self.g.rng

    def real(self, extra=(), depth=2):
        return self.g.real(REALS + tuple(extra), ARRAYS, depth)

    def closed_real(self, extra, depth=2):
        # bodies of array combinators see only their own binders and the reals
        return self.g.real(REALS + tuple(extra), (), depth)

    def array(self, depth=1):
        return self.g.array(REALS, ARRAYS, depth)

    def filled(self, value):
        return Map(self.g.fresh("u"), Const(value), self.array())

    def pick(self, *options):
        return self.rng.choice(options)

    def binop(self, op):
        a, b = self.g.fresh("a"), self.g.fresh("b")
        body = Binary(op, Var(a), Var(b)) if self.rng.random() < 0.5 else Binary(op, Var(b), Var(a))
        return a, b, body


def _beta(i):
    body = i.real(("p", "q"))
    return Apply(Lambda(("p", "q"), body, (R, R)), (i.real(), i.real()))


def _dead_let(i):
    return Let("q", i.real(), i.real())


def _let_var(i):
    return Let("q", Var(i.pick(*REALS)), Binary("*", Var("q"), i.real(("q",))))


def _let_const(i):
    return Let("q", Const(i.pick(0.0, 1.0)), Binary("+", Var("q"), i.real(("q",))))


def _let_lambda(i):
    f = Lambda(("p",), i.real(("p",)), (R,))
    return Let("f", f, Binary("+", Apply(Var("f"), (i.real(),)), i.real()))


def _forward_subst(i):
    return Let("q", i.real(), Binary(i.pick("+", "*", "-"), Var("q"), i.real()))


def _proj_tuple(i):
    return Proj(i.pick(1, 2), Tuple((i.real(), i.real())))


def _let_tuple_literal(i):
    return LetTuple(("p", "q"), Tuple((i.real(), i.real())), i.real(("p", "q")))


def _let_float(i):
    # the binder deliberately reuses "x", so floating must rename it
    inner = Let("x", i.real(), i.real(("x",)))
    return i.pick(Binary("+", inner, i.real()), Unary("sin", inner),
                  Binary("*", Var("y"), inner), Tuple((inner, i.real())))


def _mul_zero(i):
    e = i.real()
    return i.pick(Binary("*", Const(0.0), e), Binary("*", e, Const(0.0)))


def _add_zero(i):
    e = i.real()
    return i.pick(Binary("+", Const(0.0), e), Binary("+", e, Const(0.0)), Binary("-", e, Const(0.0)))


def _mul_one(i):
    e = i.real()
    return i.pick(Binary("*", Const(1.0), e), Binary("*", e, Const(1.0)), Binary("/", e, Const(1.0)))


def _map2_unit(i):
    op, unit = i.pick(("*", 1.0), ("+", 0.0))
    a, b, body = i.binop(op)
    arr, units = i.array(), i.filled(unit)
    return i.pick(Map2(a, b, body, arr, units), Map2(a, b, body, units, arr))


def _map2_zero(i):
    a, b, body = i.binop("*")
    arr, zeros = i.array(), i.filled(0.0)
    return i.pick(Map2(a, b, body, arr, zeros), Map2(a, b, body, zeros, arr))


def _map_identity(i):
    return Map("u", Var("u"), i.array())


def _map2_unused(i):
    keep = i.pick("a", "b")
    return Map2("a", "b", i.closed_real((keep,)), i.array(), i.array())


def _reduce_unit(i):
    op, unit = i.pick(("*", 1.0), ("+", 0.0))
    p, q, body = i.binop(op)
    return Reduce(p, q, body, Const(unit), i.filled(unit))


def _map_fusion(i):
    if i.rng.random() < 0.5:
        inner = Map2("a", "b", i.closed_real(("a", "b")), i.array(), i.array())
    else:
        inner = Map("a", i.closed_real(("a",)), i.array())
    # reusing "a" as the outer binder forces a rename
    x = i.pick("u", "a")
    return Map(x, i.closed_real((x,)), inner)


def _if_same(i):
    e = i.real()
    return If(_cond(i), e, e)


def _cond(i):
    return i.pick(Const(True), Const(False), Unary("gt0", i.real()))


def _if_const(i):
    return If(Const(i.pick(True, False)), i.real(), i.real())


def _if_hoist(i):
    a, b = i.real(), i.real()
    return Proj(i.pick(1, 2), If(_cond(i), Tuple((a, b)), Tuple((b, a))))


def _const_fold(i):
    a, b = Const(i.pick(0.5, 1.25, 2.0, -3.0)), Const(i.pick(0.5, 4.0, -1.0))
    return i.pick(Binary(i.pick("+", "-", "*", "/"), a, b), Unary(i.pick("sin", "cos", "exp"), a))


INSTANCES = {
    "beta": _beta, "dead-let": _dead_let, "let-var": _let_var, "let-const": _let_const,
    "let-lambda": _let_lambda, "forward-subst": _forward_subst, "proj-tuple": _proj_tuple,
    "let-tuple-literal": _let_tuple_literal, "let-float": _let_float, "mul-zero": _mul_zero,
    "add-zero": _add_zero, "mul-one": _mul_one, "map2-unit": _map2_unit, "map2-zero": _map2_zero,
    "map-identity": _map_identity, "map2-unused": _map2_unused, "reduce-unit": _reduce_unit,
    "map-fusion": _map_fusion, "if-same": _if_same, "if-const": _if_const, "if-hoist": _if_hoist,
    "const-fold": _const_fold,
}

EVERYTHING = RuleSet(GROUPS, fold_consts=True, forward_subst=True)


def test_every_rule_has_an_instance_generator():
    assert set(INSTANCES) == set(RULES)


@pytest.mark.parametrize("name", sorted(RULES))
def test_rule_is_sound(name):
    _, fn = RULES[name]
    for k in range(50):
        seed = 1000 * k + sum(map(ord, name))
        lhs = INSTANCES[name](Inst(seed))
        st = RewriteState(EVERYTHING, NameSupply(all_names(lhs)))
        rhs = fn(lhs, st)
        assert rhs is not None and rhs != lhs, f"{name} did not fire on instance {k}"
        assert typecheck_target(CTX, rhs) == typecheck_target(CTX, lhs)
        env = dict(zip(CTX.names, random_point(seed)))
        assert eval_term(env, rhs) == eval_term(env, lhs)


# ---------------------------------------------------------------- partial evaluation


def test_identity_beta():
    e = Apply(Lambda(("x",), Var("x"), (R,)), (Var("y"),))
    assert partial_evaluate(e) == Var("y")


def test_zero_let_then_algebra():
    e = parse_term("let a = 0 in a * b")
    assert partial_evaluate(e) == parse_term("0 * b")
    assert optimize(e, "pe+algebra") == Const(0.0)


def test_general_constants_are_not_propagated_by_default():
    e = parse_term("let a = 2 in a * b")
    assert partial_evaluate(e) == e
    assert optimize(e, "all") == parse_term("2 * b")


def test_let_float_respects_scope():
    e = parse_term("(let x = y * 2 in x + 1) + x")
    out = partial_evaluate(e)
    assert isinstance(out, Let) and out.name != "x"
    env = {"x": 3.0, "y": 5.0}
    assert eval_term(env, out) == eval_term(env, e)


def test_pe_on_intro_removes_every_lambda():
    p = by_name("intro")
    g = gradient(p.ctx, p.term)
    assert contains_lambda(g)
    assert not contains_lambda(partial_evaluate(g))


def test_keep_preserves_named_lets():
    e = parse_term("let w = x * y in let v = w * x in v")
    assert optimize(e, "all") == parse_term("x * y * x")
    kept = optimize(e, "all", keep={"w", "v"})
    assert kept == e


def test_budget_is_a_safety_valve():
    e = parse_term("let a = b in let c = a in c * c")
    with pytest.raises(FixpointBudgetExceeded):
        rewrite_fixpoint(e, RuleSet(PE_GROUPS, budget=1))


def test_unknown_rule_set_name():
    with pytest.raises(ValueError):
        RuleSet.named("fast")


def test_none_is_the_identity():
    p = by_name("prod")
    g = gradient(p.ctx, p.term)
    assert optimize(g, "none") is g


# ---------------------------------------------------------------- closed forms


@pytest.mark.parametrize("name, expected", [
    ("sum", "map (x. 1) A"),
    ("dot", "B"),
    ("prod", "map2 (a b. a * b) (scanr (a b. a * b) 1 (shift1L A)) (shift1R (scanl (a b. a * b) 1 A))"),
])
def test_rewrite_fixpoint_closed_forms(name, expected):
    p = by_name(name)
    g = optimize(gradient(p.ctx, p.term), "all")
    assert isinstance(g, Tuple)
    assert alpha_equal(g.items[0], parse_term(expected))


# ---------------------------------------------------------------- global soundness


def _points(prog, n, seed):
    from revad.gradcheck import sample_point

    rng = random.Random(seed)
    return [sample_point(prog.ctx, rng, prog.term) for _ in range(n)]


@pytest.mark.parametrize("rules", ["pe", "pe+algebra", "all"])
@pytest.mark.parametrize("prog", CORPUS, ids=lambda p: p.name)
def test_optimize_preserves_eval_bit_for_bit(prog, rules):
    g = gradient(prog.ctx, prog.term, prog.extensions)
    o = optimize(g, rules)
    for pt in _points(prog, 5, 3):
        env = dict(zip(prog.ctx.names, pt))
        assert eval_term(env, o) == eval_term(env, g)


@pytest.mark.parametrize("rules", ["pe", "pe+algebra", "all"])
@pytest.mark.parametrize("prog", CORPUS, ids=lambda p: p.name)
def test_optimize_is_idempotent(prog, rules):
    o = optimize(gradient(prog.ctx, prog.term, prog.extensions), rules)
    assert optimize(o, rules) == o


@pytest.mark.parametrize("prog", CORPUS, ids=lambda p: p.name)
def test_optimized_gradient_keeps_its_type(prog):
    g = gradient(prog.ctx, prog.term, prog.extensions)
    assert typecheck_target(prog.ctx, optimize(g, "all")) == typecheck_target(prog.ctx, g)


# ---------------------------------------------------------------- structural predicates


def test_linearity_of_intro_diff():
    p = by_name("intro")
    cfg = DiffConfig(p.ctx, R)
    full = p.ctx.extend("Y", Fun(p.ctx.types, R))
    assert check_linear_continuations(diff(cfg, p.term), full)


def test_duplicated_continuation_is_not_linear():
    ctx = Context.of(("x", R), ("Y", Fun((R,), R)))
    assert not check_linear_continuations(parse_term("Y(x) + Y(x)"), ctx)


def test_ground_term_is_vacuously_linear():
    assert check_linear_continuations(parse_term("x * y + 1"))


def test_let_bound_continuation_used_twice():
    e = Let("k", Lambda(("a",), Var("a"), (R,)), parse_term("k(x) + k(y)"))
    assert not check_linear_continuations(e)


def test_contains_lambda_examples():
    assert not contains_lambda(parse_term("x + 1"))
    assert contains_lambda(parse_term("fun (a) -> a"))
