"""Partial evaluation and rewrite-rule optimisation of Target terms.

Rules are grouped as in the rewrite table: inlining and forward substitution,
algebraic simplifications, array algebraic simplifications, the classic
map fusion, tuple partial evaluation, let normalisation and conditionals.
A run is a sequence of bottom-up passes; each pass rewrites every node with
the highest-priority applicable rule until none applies locally, and passes
repeat until the term stops changing.

Termination measure: the lexicographic triple (number of lambdas, term size,
sum of let-floating depths).  Beta reduction removes a lambda, every other
rule shrinks the term except let floating, which keeps the size and lowers
the depth of the floated let.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Optional

from . import ops
from .core import (
    Apply, ArrayLit, Binary, Const, Context, Fold, Fun, If, Lambda, Let, LetTuple, Map, Map2,
    NameSupply, Proj, Reduce, Scanl, Scanr, Shift1L, Shift1R, Term, Tuple, Unary, Var,
    alpha_equal, all_names, children, count_free, free_vars, map_children, subterms,
    substitute_many, term_size,
)
from .errors import FixpointBudgetExceeded

Env = Mapping[str, Term]
RuleFn = Callable[[Term, "RewriteState"], Optional[Term]]

GROUPS = ("inline", "tuple", "letnorm", "algebra", "array", "classic", "cond", "const")
PE_GROUPS = ("inline", "tuple", "letnorm")


@dataclass(frozen=True)
class RuleSet:
    """An ordered selection of rule groups plus the optional extra passes.

    ``const_lets`` substitutes lets of the constants 0 and 1; ``fold_consts``
    enables general constant propagation and folding; ``forward_subst``
    inlines single-use ground lets whose use is not under a binder.  Binders
    named in ``keep`` are neither inlined nor dropped (used to preserve
    user-named lets).
    """

    groups: tuple[str, ...]
    const_lets: bool = True
    fold_consts: bool = False
    forward_subst: bool = False
    keep: frozenset[str] = frozenset()
    budget: int = 10_000

    @classmethod
    def named(cls, name: str) -> "RuleSet":
        if name == "pe":
            return cls(PE_GROUPS)
        if name == "pe+algebra":
            return cls(PE_GROUPS + ("algebra", "array"))
        if name == "all":
            return cls(GROUPS, fold_consts=True, forward_subst=True)
        if name == "none":
            return cls(())
        raise ValueError(f"unknown rule set {name!r}; expected pe, pe+algebra, all or none")


class RewriteState:
    """Per-run state: the rule set, a name supply, and the let environment."""

    def __init__(self, rules: RuleSet, supply: NameSupply) -> None:
        self.rules = rules
        self.supply = supply
        self.env: dict[str, Term] = {}


# ---------------------------------------------------------------- predicates


def is_atomic(t: Term) -> bool:
    return isinstance(t, (Var, Const, Lambda))


def _const(t: Term, value: float) -> bool:
    return isinstance(t, Const) and not isinstance(t.value, bool) and t.value == value


def _binop_body(x: str, y: str, body: Term, op: str) -> bool:
    """``body`` is ``x op y`` (or ``y op x``; both ops used here are commutative)."""
    if not (isinstance(body, Binary) and body.op == op):
        return False
    l, r = body.left, body.right
    if not (isinstance(l, Var) and isinstance(r, Var)):
        return False
    return (l.name, r.name) in ((x, y), (y, x))


def _lookup(t: Term, env: Env) -> Term:
    seen = 0
    while isinstance(t, Var) and t.name in env and seen < 64:
        t = env[t.name]
        seen += 1
    return t


def is_filled(t: Term, value: float, env: Env = {}) -> bool:
    """``t`` is an array whose elements are all the constant ``value``."""
    t = _lookup(t, env)
    if isinstance(t, Map):
        return _const(t.body, value)
    if isinstance(t, Map2):
        return _const(t.body, value)
    if isinstance(t, (Shift1L, Shift1R)):
        return is_filled(t.arg, value, env)
    if isinstance(t, ArrayLit):
        return all(_const(a, value) for a in t.items)
    if value == 1.0 and isinstance(t, (Scanl, Scanr)):
        return _binop_body(t.x, t.y, t.body, "*") and _const(t.init, 1.0) and is_filled(t.arg, 1.0, env)
    if value == 0.0 and isinstance(t, (Scanl, Scanr)):
        return _binop_body(t.x, t.y, t.body, "+") and _const(t.init, 0.0) and is_filled(t.arg, 0.0, env)
    return False


def is_ones(t: Term, env: Env = {}) -> bool:
    return is_filled(t, 1.0, env)


def is_zeros(t: Term, env: Env = {}) -> bool:
    return is_filled(t, 0.0, env)


def contains_lambda(e: Term) -> bool:
    return any(isinstance(t, (Lambda, Apply)) for t in subterms(e))


def _occurs_unrepeated(e: Term, x: str) -> bool:
    """The single free occurrence of ``x`` is not under a lambda or combinator binder."""
    if isinstance(e, Var):
        return True
    for c, bs in children(e):
        if x in bs or x not in free_vars(c):
            continue
        if bs and not isinstance(e, (Let, LetTuple)):
            return False
        return _occurs_unrepeated(c, x)
    return True


# ---------------------------------------------------------------- rule helpers


def _fresh_params(names: tuple[str, ...], avoid: set[str], st: RewriteState, body: Term):
    """Rename any of ``names`` that clash with ``avoid``; returns (names, body)."""
    ren = {n: st.supply.fresh(n) for n in names if n in avoid}
    if not ren:
        return names, body
    body = substitute_many(body, {a: Var(b) for a, b in ren.items()})
    return tuple(ren.get(n, n) for n in names), body


def _bind_sequential(names: tuple[str, ...], values: tuple[Term, ...], body: Term, st: RewriteState) -> Term:
    avoid: set[str] = set()
    for v in values:
        avoid |= free_vars(v)
    names, body = _fresh_params(names, avoid, st, body)
    for n, v in reversed(list(zip(names, values))):
        body = Let(n, v, body)
    return body


# ---------------------------------------------------------------- inlining and forward substitution


def rule_beta(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, Apply) and isinstance(t.fn, Lambda) and len(t.fn.params) == len(t.args):
        return _bind_sequential(t.fn.params, t.args, t.fn.body, st)
    return None


def rule_dead_let(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, Let) and t.name not in free_vars(t.body) and t.name not in st.rules.keep:
        return t.body
    if isinstance(t, LetTuple) and not set(t.names) & free_vars(t.body):
        return t.body
    return None


def rule_let_var(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, Let) and isinstance(t.bound, Var):
        return substitute_many(t.body, {t.name: t.bound})
    return None


def rule_let_const(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, Let) and isinstance(t.bound, Const):
        v = t.bound.value
        if st.rules.fold_consts or (st.rules.const_lets and not isinstance(v, bool) and v in (0.0, 1.0)):
            return substitute_many(t.body, {t.name: t.bound})
    return None


def rule_let_lambda(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, Let) and isinstance(t.bound, Lambda) and count_free(t.body, t.name) <= 1:
        return substitute_many(t.body, {t.name: t.bound})
    return None


def rule_forward_subst(t: Term, st: RewriteState) -> Optional[Term]:
    if not st.rules.forward_subst or not isinstance(t, Let) or isinstance(t.bound, Lambda):
        return None
    if t.name in st.rules.keep:
        return None
    if count_free(t.body, t.name) == 1 and _occurs_unrepeated(t.body, t.name):
        return substitute_many(t.body, {t.name: t.bound})
    return None


# ---------------------------------------------------------------- tuple partial evaluation


def rule_proj_tuple(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, Proj):
        arg = t.arg
        if isinstance(arg, Tuple):
            return arg.items[t.index - 1]
        bound = _lookup(arg, st.env) if isinstance(arg, Var) else None
        if isinstance(bound, Tuple) and isinstance(bound.items[t.index - 1], (Var, Const)):
            return bound.items[t.index - 1]
    return None


def rule_let_tuple_literal(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, LetTuple) and isinstance(t.bound, Tuple) and len(t.bound.items) == len(t.names):
        return _bind_sequential(t.names, t.bound.items, t.body, st)
    return None


# ---------------------------------------------------------------- let normalisation


def _eval_slots(t: Term) -> list[tuple[str, Optional[int]]]:
    """Fields of ``t`` in evaluation-context position, as (field, index) pairs."""
    if isinstance(t, (Let, LetTuple)):
        return [("bound", None)]
    if isinstance(t, (Proj, Unary, Shift1L, Shift1R, Map)):
        return [("arg", None)]
    if isinstance(t, If):
        return [("cond", None)]
    if isinstance(t, Binary):
        return [("left", None)] + ([("right", None)] if is_atomic(t.left) else [])
    if isinstance(t, Map2):
        return [("left", None)] + ([("right", None)] if is_atomic(t.left) else [])
    if isinstance(t, Fold):
        return [("init", None)] + ([("arg", None)] if is_atomic(t.init) else [])
    if isinstance(t, (Tuple, ArrayLit)):
        out = []
        for i, a in enumerate(t.items):
            out.append(("items", i))
            if not is_atomic(a):
                break
        return out
    if isinstance(t, Apply):
        out: list[tuple[str, Optional[int]]] = [("fn", None)]
        if is_atomic(t.fn):
            for i, a in enumerate(t.args):
                out.append(("args", i))
                if not is_atomic(a):
                    break
        return out
    return []


def _get(t: Term, slot: tuple[str, Optional[int]]) -> Term:
    f, i = slot
    v = getattr(t, f)
    return v if i is None else v[i]


def _put(t: Term, slot: tuple[str, Optional[int]], new: Term) -> Term:
    f, i = slot
    if i is None:
        return replace(t, **{f: new})
    items = list(getattr(t, f))
    items[i] = new
    return replace(t, **{f: tuple(items)})


def _context_fv(t: Term, slot: tuple[str, Optional[int]]) -> set[str]:
    hole = Var("\0hole")
    ctx = _put(t, slot, hole)
    return set(free_vars(ctx)) - {"\0hole"}


def _float(t: Term, slot, inner, kind: str, st: RewriteState) -> Term:
    clash = _context_fv(t, slot)
    names = (inner.name,) if isinstance(inner, Let) else inner.names
    names, body = _fresh_params(names, clash, st, inner.body)
    if kind == "let":
        return Let(names[0], inner.bound, _put(t, slot, body))
    if kind == "lettuple":
        return LetTuple(names, inner.bound, _put(t, slot, body))
    raise AssertionError(kind)


def rule_let_float(t: Term, st: RewriteState) -> Optional[Term]:
    for slot in _eval_slots(t):
        c = _get(t, slot)
        if isinstance(c, Let):
            return _float(t, slot, c, "let", st)
        if isinstance(c, LetTuple):
            return _float(t, slot, c, "lettuple", st)
    return None


# ---------------------------------------------------------------- algebraic simplifications


def rule_mul_zero(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, Binary) and t.op == "*" and (_const(t.left, 0.0) or _const(t.right, 0.0)):
        return Const(0.0)
    return None


def rule_add_zero(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, Binary) and t.op == "+":
        if _const(t.left, 0.0):
            return t.right
        if _const(t.right, 0.0):
            return t.left
    if isinstance(t, Binary) and t.op == "-" and _const(t.right, 0.0):
        return t.left
    return None


def rule_mul_one(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, Binary) and t.op == "*":
        if _const(t.left, 1.0):
            return t.right
        if _const(t.right, 1.0):
            return t.left
    if isinstance(t, Binary) and t.op == "/" and _const(t.right, 1.0):
        return t.left
    return None


# ---------------------------------------------------------------- array algebraic simplifications


def rule_map2_unit(t: Term, st: RewriteState) -> Optional[Term]:
    """``map2 * A Ones ~> A``, ``map2 + A Zeros ~> A`` and their mirrors."""
    if not isinstance(t, Map2):
        return None
    for op, unit in (("*", is_ones), ("+", is_zeros)):
        if not _binop_body(t.x, t.y, t.body, op):
            continue
        # both sides may be units; keep the smaller one
        keep = [a for a, b in ((t.left, t.right), (t.right, t.left)) if unit(b, st.env)]
        if keep:
            return min(keep, key=lambda a: term_size(_lookup(a, st.env)))
    return None


def rule_map2_zero(t: Term, st: RewriteState) -> Optional[Term]:
    """``map2 * A Zeros ~> Zeros``."""
    if isinstance(t, Map2) and _binop_body(t.x, t.y, t.body, "*"):
        if is_zeros(t.right, st.env):
            return t.right
        if is_zeros(t.left, st.env):
            return t.left
    return None


def rule_map_identity(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, Map) and isinstance(t.body, Var) and t.body.name == t.x:
        return t.arg
    return None


def rule_map2_unused(t: Term, st: RewriteState) -> Optional[Term]:
    """A ``map2`` whose body ignores one argument is a ``map`` over the other."""
    if not isinstance(t, Map2):
        return None
    fv = free_vars(t.body)
    if t.x not in fv:
        return Map(t.y, t.body, t.right)
    if t.y not in fv:
        return Map(t.x, t.body, t.left)
    return None


def rule_reduce_unit(t: Term, st: RewriteState) -> Optional[Term]:
    """``reduce * 1 Ones ~> 1`` and ``reduce + 0 Zeros ~> 0``."""
    if isinstance(t, Reduce):
        if _binop_body(t.x, t.y, t.body, "*") and _const(t.init, 1.0) and is_ones(t.arg, st.env):
            return Const(1.0)
        if _binop_body(t.x, t.y, t.body, "+") and _const(t.init, 0.0) and is_zeros(t.arg, st.env):
            return Const(0.0)
    return None


# ---------------------------------------------------------------- classic array simplification


def rule_map_fusion(t: Term, st: RewriteState) -> Optional[Term]:
    """``map (x.e1) (map2 (y1,y2.e2) A B) ~> map2 (y1,y2. let x = e2 in e1) A B``."""
    if not isinstance(t, Map):
        return None
    inner = t.arg
    if isinstance(inner, Map2):
        (x,), e1 = _fresh_params((t.x,), {inner.x, inner.y} | free_vars(inner.body), st, t.body)
        return Map2(inner.x, inner.y, Let(x, inner.body, e1), inner.left, inner.right)
    if isinstance(inner, Map):
        (x,), e1 = _fresh_params((t.x,), {inner.x} | free_vars(inner.body), st, t.body)
        return Map(inner.x, Let(x, inner.body, e1), inner.arg)
    return None


# ---------------------------------------------------------------- conditionals


def rule_if_same(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, If) and alpha_equal(t.then, t.orelse):
        return t.then
    return None


def rule_if_const(t: Term, st: RewriteState) -> Optional[Term]:
    if isinstance(t, If) and isinstance(t.cond, Const) and isinstance(t.cond.value, bool):
        return t.then if t.cond.value else t.orelse
    return None


def rule_if_hoist(t: Term, st: RewriteState) -> Optional[Term]:
    """``f(if c then a else b) ~> if c then f(a) else f(b)`` for projections."""
    if isinstance(t, Proj) and isinstance(t.arg, If):
        c = t.arg
        return If(c.cond, Proj(t.index, c.then), Proj(t.index, c.orelse))
    return None


# ---------------------------------------------------------------- constant folding


def rule_fold(t: Term, st: RewriteState) -> Optional[Term]:
    if not st.rules.fold_consts:
        return None
    if isinstance(t, Binary) and isinstance(t.left, Const) and isinstance(t.right, Const):
        a, b = t.left.value, t.right.value
        if not isinstance(a, bool) and not isinstance(b, bool):
            return Const(ops.OP2[t.op].fn(a, b))
    if isinstance(t, Unary) and isinstance(t.arg, Const) and not isinstance(t.arg.value, bool):
        if t.op in ops.PREDICATES:
            return Const(ops.PREDICATES[t.op](t.arg.value))
        return Const(ops.OP1[t.op].fn(t.arg.value))
    return None


RULES: dict[str, tuple[str, RuleFn]] = {
    "beta": ("inline", rule_beta),
    "dead-let": ("inline", rule_dead_let),
    "let-var": ("inline", rule_let_var),
    "let-const": ("inline", rule_let_const),
    "let-lambda": ("inline", rule_let_lambda),
    "forward-subst": ("inline", rule_forward_subst),
    "proj-tuple": ("tuple", rule_proj_tuple),
    "let-tuple-literal": ("tuple", rule_let_tuple_literal),
    "let-float": ("letnorm", rule_let_float),
    "mul-zero": ("algebra", rule_mul_zero),
    "add-zero": ("algebra", rule_add_zero),
    "mul-one": ("algebra", rule_mul_one),
    "map2-unit": ("array", rule_map2_unit),
    "map2-zero": ("array", rule_map2_zero),
    "map-identity": ("array", rule_map_identity),
    "map2-unused": ("array", rule_map2_unused),
    "reduce-unit": ("array", rule_reduce_unit),
    "map-fusion": ("classic", rule_map_fusion),
    "if-same": ("cond", rule_if_same),
    "if-const": ("cond", rule_if_const),
    "if-hoist": ("cond", rule_if_hoist),
    "const-fold": ("const", rule_fold),
}


# ---------------------------------------------------------------- driver


class _Pass:
    def __init__(self, rules: RuleSet, supply: NameSupply) -> None:
        self.state = RewriteState(rules, supply)
        order = {g: i for i, g in enumerate(rules.groups)}
        self.rules = sorted(
            ((name, fn) for name, (g, fn) in RULES.items() if g in order),
            key=lambda r: order[RULES[r[0]][0]],
        )
        self.changed = False

    def at_node(self, t: Term) -> Term:
        for _ in range(1000):
            for _, fn in self.rules:
                new = fn(t, self.state)
                if new is not None and new != t:
                    self.changed = True
                    t = new
                    break
            else:
                return t
        raise FixpointBudgetExceeded(1000)

    def go(self, t: Term) -> Term:
        if isinstance(t, Var) or not t.SPEC:
            return self.at_node(t)
        if isinstance(t, Let):
            bound = self.go(t.bound)
            saved = self._enter((t.name,), bound)
            body = self.go(t.body)
            self._leave(saved)
            t = Let(t.name, bound, body) if (bound is not t.bound or body is not t.body) else t
            return self.at_node(t)

        def child(c: Term, bs: tuple[str, ...]) -> Term:
            if not bs:
                return self.go(c)
            saved = self._enter(bs, None)
            out = self.go(c)
            self._leave(saved)
            return out

        return self.at_node(map_children(t, child))

    def _enter(self, names: Iterable[str], bound: Optional[Term]):
        st = self.state
        saved = dict(st.env)
        names = tuple(names)
        for n in names:
            st.env.pop(n, None)
        # a binder invalidates env entries that mention it
        for k in [k for k, v in st.env.items() if free_vars(v) & set(names)]:
            del st.env[k]
        if bound is not None and len(names) == 1:
            st.env[names[0]] = bound
        return saved

    def _leave(self, saved) -> None:
        self.state.env = saved


def rewrite_fixpoint(e: Term, rules: RuleSet, supply: Optional[NameSupply] = None) -> Term:
    """Apply ``rules`` bottom-up until nothing changes."""
    if not rules.groups:
        return e
    supply = supply or NameSupply(all_names(e))
    for _ in range(rules.budget):
        p = _Pass(rules, supply)
        new = p.go(e)
        if not p.changed or new == e:
            return new
        e = new
    raise FixpointBudgetExceeded(rules.budget)


def partial_evaluate(e: Term, const_lets: bool = True) -> Term:
    """Beta-reduce, inline continuations and normalise lets."""
    return rewrite_fixpoint(e, RuleSet(PE_GROUPS, const_lets=const_lets))


def optimize(e: Term, rules: str | RuleSet = "all", keep: Iterable[str] = ()) -> Term:
    """Partial evaluation to fixpoint, then the selected rule set to fixpoint."""
    rs = RuleSet.named(rules) if isinstance(rules, str) else rules
    if keep:
        rs = replace(rs, keep=rs.keep | frozenset(keep))
    if not rs.groups:
        return e
    supply = NameSupply(all_names(e))
    e = rewrite_fixpoint(e, RuleSet(PE_GROUPS, const_lets=rs.const_lets, keep=rs.keep), supply)
    return rewrite_fixpoint(e, rs, supply)


def check_linear_continuations(e: Term, ctx: Optional[Context] = None) -> bool:
    """Every function-typed variable, free or bound, occurs exactly once in its scope."""
    fun_free: set[str] = set()
    if ctx is not None:
        fun_free = {n for n, t in ctx if isinstance(t, Fun)}
    for t in subterms(e):
        if isinstance(t, Apply) and isinstance(t.fn, Var):
            fun_free.add(t.fn.name)
    fv = free_vars(e)
    for n in fun_free & fv:
        if count_free(e, n) != 1:
            return False

    def is_fun_bound(bound: Term) -> bool:
        return isinstance(bound, Lambda) or (isinstance(bound, Var) and bound.name in fun_free)

    for t in subterms(e):
        if isinstance(t, Let) and is_fun_bound(t.bound):
            if count_free(t.body, t.name) != 1:
                return False
        if isinstance(t, LetTuple) and isinstance(t.bound, Tuple):
            for n, item in zip(t.names, t.bound.items):
                if is_fun_bound(item) and count_free(t.body, n) != 1:
                    return False
        elif isinstance(t, LetTuple):
            # destructuring the result of D: the continuation is the last component
            if _is_d_pair(t.bound) and count_free(t.body, t.names[-1]) != 1:
                return False
    return True


def _is_d_pair(t: Term) -> bool:
    while isinstance(t, (Let, LetTuple)):
        t = t.body
    return isinstance(t, Tuple) and len(t.items) == 2 and isinstance(t.items[1], Lambda)
