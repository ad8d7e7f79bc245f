"""The direct reverse-mode macro D and the gradient entry point.

``D^Gamma_Y(e)`` produces a pair of the primal value of ``e`` and a
continuation taking cotangents for every entry of Gamma followed by a
cotangent for the result.  The continuation closes over the primal values it
needs and calls ``Y`` exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from . import ops
from .core import (
    REAL, Apply, Arr, Binary, Const, Context, Foldl, Fun, If, Lambda, Let,
    LetTuple, Map, Map2, NameSupply, Prod, Proj, Real, Reduce, Scanl, Scanr, Shift1L,
    Shift1R, Term, Tuple, Type, Unary, Var, all_names, free_vars, freshen_source,
)
from .errors import (
    IndexOutOfRange, NotScalarOutput, TypeMismatch, UnknownVariable, UnsupportedConstruct,
)
from .typecheck import EXTENSIONS, typecheck_source, typecheck_target


# ---------------------------------------------------------------- ground monoid


def zero_of(t: Type, like: Term, supply: NameSupply) -> Term:
    """The zero of ground type ``t``; ``like`` supplies array sizes."""
    if isinstance(t, Real):
        return Const(0.0)
    if isinstance(t, Arr):
        v = supply.fresh("v")
        return Map(v, zero_of(t.elem, Var(v), supply), like)
    if isinstance(t, Prod):
        return Tuple(tuple(zero_of(s, Proj(i + 1, like), supply) for i, s in enumerate(t.items)))
    raise TypeMismatch("ground type", t, "zero")


def ones_like(like: Term, supply: NameSupply) -> Term:
    v = supply.fresh("v")
    return Map(v, Const(1.0), like)


def _bind_atom(t: Term, supply: NameSupply, base: str, binds: list[tuple[str, Term]]) -> Term:
    if isinstance(t, (Var, Const)):
        return t
    name = supply.fresh(base)
    binds.append((name, t))
    return Var(name)


def hat_add(t: Type, a: Term, b: Term, supply: NameSupply) -> Term:
    """Monoid addition on ground type ``t``."""
    if isinstance(t, Real):
        return Binary("+", a, b)
    if isinstance(t, Arr):
        u, v = supply.fresh("u"), supply.fresh("v")
        return Map2(u, v, hat_add(t.elem, Var(u), Var(v), supply), a, b)
    if isinstance(t, Prod):
        binds: list[tuple[str, Term]] = []
        pa = _bind_atom(a, supply, "p", binds)
        pb = _bind_atom(b, supply, "q", binds)
        body: Term = Tuple(tuple(
            hat_add(s, Proj(i + 1, pa), Proj(i + 1, pb), supply) for i, s in enumerate(t.items)
        ))
        for name, bound in reversed(binds):
            body = Let(name, bound, body)
        return body
    raise TypeMismatch("ground type", t, "hat_add")


def scale(s: Term, t: Type, a: Term, supply: NameSupply) -> Term:
    """Scalar multiple ``s * a`` for ``a`` of ground type ``t``."""
    if isinstance(t, Real):
        return Binary("*", s, a)
    if isinstance(t, Arr):
        v = supply.fresh("v")
        return Map(v, scale(s, t.elem, Var(v), supply), a)
    if isinstance(t, Prod):
        binds: list[tuple[str, Term]] = []
        pa = _bind_atom(a, supply, "p", binds)
        body: Term = Tuple(tuple(scale(s, u, Proj(i + 1, pa), supply) for i, u in enumerate(t.items)))
        for name, bound in reversed(binds):
            body = Let(name, bound, body)
        return body
    raise TypeMismatch("ground type", t, "scale")


def inject_at(ctx: Context, i: int, z: Term, supply: Optional[NameSupply] = None) -> Tuple:
    """The tuple ``[i]z``: zeros everywhere except ``z`` at position ``i``."""
    if not 1 <= i <= len(ctx):
        raise IndexOutOfRange(f"position {i} outside a context of size {len(ctx)}")
    supply = supply or NameSupply(set(ctx.names) | all_names(z))
    return Tuple(tuple(
        z if k == i else zero_of(t, Var(n), supply) for k, (n, t) in enumerate(ctx, start=1)
    ))


def identity_cont(ctx: Context, supply: NameSupply) -> Lambda:
    ys = tuple(supply.fresh("y") for _ in ctx)
    return Lambda(ys, Tuple(tuple(Var(y) for y in ys)), ctx.types)


# ---------------------------------------------------------------- configuration


@dataclass(frozen=True)
class DiffConfig:
    gamma: Context
    rho: Type
    cont_var: str = "Y"
    extensions: frozenset[str] = frozenset()


@dataclass
class SubGradient:
    """The partially evaluated gradient of a combinator body, sliced on demand."""

    ctx: Context
    term: Term
    differ: "Differ"

    def component(self, name: str) -> Term:
        from .optimizer import partial_evaluate

        if name not in self.ctx:
            return Const(0.0)
        return partial_evaluate(Proj(self.ctx.pos(name), self.term))


class Differ:
    """Holds the fresh-name supply and the enabled extensions for one run."""

    def __init__(self, supply: NameSupply, extensions: Iterable[str] = (),
                 reduce_variant: str = "corrected") -> None:
        self.supply = supply
        self.ext = frozenset(extensions)
        # "uncorrected" uses the naive open-reduce chain, for comparison only
        self.reduce_variant = reduce_variant
        unknown = self.ext - EXTENSIONS
        if unknown:
            raise UnsupportedConstruct(f"unknown extensions: {sorted(unknown)}")

    def fresh(self, base: str) -> str:
        return self.supply.fresh(base)

    def type_of(self, gamma: Context, e: Term) -> Type:
        return typecheck_target(gamma, e)

    # -- continuations
    def cont(self, gamma: Context, result_t: Type, build) -> Lambda:
        """Build ``fun (y1..yn, z) -> build(ys, z)``."""
        ys = [self.fresh("y") for _ in gamma]
        z = self.fresh("z")
        body = build([Var(y) for y in ys], Var(z))
        return Lambda(tuple(ys) + (z,), body, gamma.types + (result_t,))

    def sub_gradient(self, gamma: Context, binders: Sequence[tuple[str, Type]], body: Term) -> SubGradient:
        """Gradient of a combinator body w.r.t. its binders and the free context entries."""
        from .optimizer import partial_evaluate

        fv = free_vars(body)
        bound = {n for n, _ in binders}
        entries = tuple((n, t) for n, t in gamma if n in fv and n not in bound) + tuple(binders)
        ctx = Context(entries)
        term = partial_evaluate(self.gradient_term(ctx, body))
        return SubGradient(ctx, term, self)

    def gradient_term(self, ctx: Context, e: Term) -> Term:
        y = self.fresh("Y")
        cfg = DiffConfig(ctx, Prod(ctx.types), y, self.ext)
        d = self.diff(cfg.gamma, y, e)
        seeds = [zero_of(t, Var(n), self.supply) for n, t in ctx] + [Const(1.0)]
        return Let(y, identity_cont(ctx, self.supply), Apply(Proj(2, d), tuple(seeds)))

    def gamma_contribution(self, gamma: Context, ys: list[Term], sub: SubGradient, weigh) -> list[Term]:
        """``ys +^ reduce +^ 0 (weigh(D_j))`` for each context entry the body mentions.

        ``weigh(j_type, D_j)`` returns the array of weighted per-element
        contributions for entry j, given the array ``D_j`` of its partials.
        """
        out = list(ys)
        for k, (name, t) in enumerate(gamma):
            if name not in sub.ctx:
                continue
            g = weigh(t, sub.component(name))
            p, q = self.fresh("p"), self.fresh("q")
            total = Reduce(p, q, hat_add(t, Var(p), Var(q), self.supply),
                           zero_of(t, Var(name), self.supply), g)
            out[k] = hat_add(t, ys[k], total, self.supply)
        return out

    # -- the macro
    def diff(self, gamma: Context, Y: str, e: Term) -> Term:
        s = self.supply
        if isinstance(e, Const):
            if isinstance(e.value, bool):
                raise UnsupportedConstruct("boolean constants have no derivative")
            return Tuple((e, self.cont(gamma, REAL, lambda ys, z: Apply(Var(Y), tuple(ys)))))
        if isinstance(e, Var):
            if e.name not in gamma:
                raise UnknownVariable(e.name)
            i = gamma.pos(e.name) - 1
            t = gamma.lookup(e.name)

            def var_cont(ys, z):
                args = list(ys)
                args[i] = hat_add(t, ys[i], z, s)
                return Apply(Var(Y), tuple(args))

            return Tuple((e, self.cont(gamma, t, var_cont)))
        if isinstance(e, Let):
            ta = self.type_of(gamma, e.bound)
            tb = self.type_of(gamma.extend(e.name, ta), e.body)
            y1 = self.fresh("Y")
            d1 = self.diff(gamma, Y, e.bound)
            d2 = self.diff(gamma.extend(e.name, ta), y1, e.body)
            r, y2 = self.fresh("r"), self.fresh("Y")
            lam = self.cont(gamma, tb, lambda ys, z: Apply(
                Var(y2), tuple(ys) + (zero_of(ta, Var(e.name), s), z)))
            return LetTuple((e.name, y1), d1, LetTuple((r, y2), d2, Tuple((Var(r), lam))))
        if isinstance(e, Tuple):
            if len(e.items) != 2:
                raise UnsupportedConstruct("Source products are binary")
            ta = self.type_of(gamma, e.items[0])
            tb = self.type_of(gamma, e.items[1])
            a, y1 = self.fresh("a"), self.fresh("Y")
            b, y2 = self.fresh("b"), self.fresh("Y")
            d1 = self.diff(gamma, Y, e.items[0])
            d2 = self.diff(gamma.extend(a, ta), y1, e.items[1])
            lam = self.cont(gamma, Prod((ta, tb)), lambda ys, z: Apply(
                Var(y2), tuple(ys) + (Proj(1, z), Proj(2, z))))
            return LetTuple((a, y1), d1, LetTuple((b, y2), d2,
                                                  Tuple((Tuple((Var(a), Var(b))), lam))))
        if isinstance(e, Proj):
            tp = self.type_of(gamma, e.arg)
            assert isinstance(tp, Prod)
            x, y1 = self.fresh("a"), self.fresh("Y")
            d = self.diff(gamma, Y, e.arg)
            ti = tp.items[e.index - 1]

            def proj_cont(ys, z):
                parts = tuple(
                    z if k == e.index else zero_of(u, Proj(k, Var(x)), s)
                    for k, u in enumerate(tp.items, start=1)
                )
                return Apply(Var(y1), tuple(ys) + (Tuple(parts),))

            return LetTuple((x, y1), d, Tuple((Proj(e.index, Var(x)), self.cont(gamma, ti, proj_cont))))
        if isinstance(e, Unary):
            if e.op not in ops.OP1:
                raise UnsupportedConstruct(f"{e.op} is not differentiable")
            x, y1 = self.fresh("a"), self.fresh("Y")
            d = self.diff(gamma, Y, e.arg)
            deriv = ops.OP1[e.op].deriv(Var(x))
            lam = self.cont(gamma, REAL, lambda ys, z: Apply(
                Var(y1), tuple(ys) + (Binary("*", deriv, z),)))
            return LetTuple((x, y1), d, Tuple((Unary(e.op, Var(x)), lam)))
        if isinstance(e, Binary):
            op = ops.OP2[e.op]
            a, y1 = self.fresh("a"), self.fresh("Y")
            b, y2 = self.fresh("b"), self.fresh("Y")
            d1 = self.diff(gamma, Y, e.left)
            d2 = self.diff(gamma.extend(a, REAL), y1, e.right)
            da, db = op.d1(Var(a), Var(b)), op.d2(Var(a), Var(b))
            lam = self.cont(gamma, REAL, lambda ys, z: Apply(
                Var(y2), tuple(ys) + (Binary("*", da, z), Binary("*", db, z))))
            return LetTuple((a, y1), d1, LetTuple((b, y2), d2,
                                                  Tuple((Binary(e.op, Var(a), Var(b)), lam))))
        if isinstance(e, Map2):
            return self.diff_map2(gamma, Y, e)
        if isinstance(e, Reduce):
            if free_vars(e.body) - {e.x, e.y}:
                if "reduce-open" not in self.ext:
                    raise UnsupportedConstruct("reduce body with free variables needs reduce-open")
            return self.diff_reduce(gamma, Y, e)
        if isinstance(e, If):
            if "cond" not in self.ext:
                raise UnsupportedConstruct("conditionals need the cond extension")
            from .extensions import diff_conditional

            return diff_conditional(self, gamma, Y, e)
        if isinstance(e, Foldl):
            if "foldl" not in self.ext:
                raise UnsupportedConstruct("foldl needs the foldl extension")
            from .extensions import diff_foldl

            return diff_foldl(self, gamma, Y, e)
        if isinstance(e, Map):
            if "foldl" not in self.ext:
                raise UnsupportedConstruct("map needs the foldl extension")
            from .extensions import diff_map

            return diff_map(self, gamma, Y, e)
        raise UnsupportedConstruct(f"cannot differentiate {type(e).__name__}")

    def map2_adjoint(self, gamma: Context, ys: list[Term], body_x: str, body_y: str, body: Term,
                     A: Term, B: Term, Z: Term) -> tuple[list[Term], Term, Term]:
        """Cotangents produced by ``map2 (x,y.body) A B`` for output cotangent ``Z``."""
        s = self.supply
        sub = self.sub_gradient(gamma, ((body_x, REAL), (body_y, REAL)), body)

        def elementwise(t: Type, d: Term) -> Term:
            u, v = self.fresh("u"), self.fresh("v")
            dj = Map2(body_x, body_y, d, A, B)
            return Map2(u, v, scale(Var(u), t, Var(v), s), Z, dj)

        new_ys = self.gamma_contribution(gamma, ys, sub, elementwise)
        u, v = self.fresh("u"), self.fresh("v")
        da = Map2(u, v, Binary("*", Var(u), Var(v)),
                  Map2(body_x, body_y, sub.component(body_x), A, B), Z)
        u, v = self.fresh("u"), self.fresh("v")
        db = Map2(u, v, Binary("*", Var(u), Var(v)),
                  Map2(body_x, body_y, sub.component(body_y), A, B), Z)
        return new_ys, da, db

    def diff_map2(self, gamma: Context, Y: str, e: Map2) -> Term:
        ta = self.type_of(gamma, e.left)
        assert isinstance(ta, Arr)
        A, y1 = self.fresh("A"), self.fresh("Y")
        B, y2 = self.fresh("B"), self.fresh("Y")
        d1 = self.diff(gamma, Y, e.left)
        d2 = self.diff(gamma.extend(A, ta), y1, e.right)

        def map2_cont(ys, Z):
            new_ys, da, db = self.map2_adjoint(gamma, ys, e.x, e.y, e.body, Var(A), Var(B), Z)
            return Apply(Var(y2), tuple(new_ys) + (da, db))

        lam = self.cont(gamma, ta, map2_cont)
        primal = Map2(e.x, e.y, e.body, Var(A), Var(B))
        return LetTuple((A, y1), d1, LetTuple((B, y2), d2, Tuple((primal, lam))))

    def reduce_forward(self, gamma: Context, x: str, y: str, body: Term, init: Term,
                       A: Term) -> tuple[list[tuple[str, Term]], tuple[str, str, str, str], SubGradient]:
        """The A0..A3 bindings the reduce adjoint needs, computed on the forward pass."""
        sub = self.sub_gradient(gamma, ((x, REAL), (y, REAL)), body)
        A0, A1, A2, A3 = (self.fresh("A") for _ in range(4))
        u, v = self.fresh("u"), self.fresh("v")
        chain = [
            (A0, Shift1R(Scanl(x, y, body, init, A))),
            (A1, Shift1L(Map2(x, y, sub.component(x), Var(A0), A))),
            (A2, Map2(x, y, sub.component(y), Var(A0), A)),
            (A3, Scanr(u, v, Binary("*", Var(u), Var(v)), Const(1.0), Var(A1))),
        ]
        return chain, (A0, A1, A2, A3), sub

    def fold_adjoint(self, gamma: Context, ys: list[Term], x: str, y: str, sub: SubGradient,
                     A0: str, A: Term, A2: str, A3: str, z: Term) -> tuple[list[Term], Term]:
        """Context cotangents and the array cotangent of a reduce or foldl."""
        a, b = self.fresh("a"), self.fresh("b")
        dA = Map2(a, b, Binary("*", Binary("*", Var(a), Var(b)), z), Var(A3), Var(A2))
        new_ys = list(ys)
        if set(sub.ctx.names) - {x, y}:
            from .extensions import open_fold_contribution

            new_ys = open_fold_contribution(self, gamma, ys, sub, x, y, Var(A0), A, Var(A3), z,
                                            variant=self.reduce_variant)
        return new_ys, dA

    def diff_reduce(self, gamma: Context, Y: str, e: Reduce) -> Term:
        y1, Y1 = self.fresh("a"), self.fresh("Y")
        A, Y2 = self.fresh("A"), self.fresh("Y")
        d1 = self.diff(gamma, Y, e.init)
        d2 = self.diff(gamma.extend(y1, REAL), Y1, e.arg)
        chain, (A0, _, A2, A3), sub = self.reduce_forward(gamma, e.x, e.y, e.body, Var(y1), Var(A))

        def reduce_cont(ys, z):
            new_ys, dA = self.fold_adjoint(gamma, ys, e.x, e.y, sub, A0, Var(A), A2, A3, z)
            return Apply(Var(Y2), tuple(new_ys) + (Const(0.0), dA))

        lam = self.cont(gamma, REAL, reduce_cont)
        out: Term = Tuple((Reduce(e.x, e.y, e.body, Var(y1), Var(A)), lam))
        for name, bound in reversed(chain):
            out = Let(name, bound, out)
        return LetTuple((y1, Y1), d1, LetTuple((A, Y2), d2, out))


# ---------------------------------------------------------------- public API


def _differ_for(ctx: Context, e: Term, extensions: Iterable[str],
                reduce_variant: str = "corrected") -> tuple[Differ, Term]:
    e = freshen_source(e, ctx)
    supply = NameSupply(set(ctx.names) | all_names(e) | {"Y"})
    return Differ(supply, extensions, reduce_variant), e


def diff(cfg: DiffConfig, e: Term) -> Term:
    """``D^Gamma_Y(e)`` with ``Y = cfg.cont_var``."""
    typecheck_source(cfg.gamma, e, cfg.extensions)
    d, e = _differ_for(cfg.gamma, e, cfg.extensions)
    d.supply.avoid([cfg.cont_var])
    return d.diff(cfg.gamma, cfg.cont_var, e)


def diff_type(cfg: DiffConfig, e: Term) -> Type:
    """The type of a diff output: ``A x (Gamma, A -> rho)``."""
    a = typecheck_source(cfg.gamma, e, cfg.extensions)
    return Prod((a, Fun(cfg.gamma.types + (a,), cfg.rho)))


def gradient(ctx: Context, e: Term, extensions: Iterable[str] = (),
             reduce_variant: str = "corrected") -> Term:
    """``let Y = Id in (snd D(e))(0_Gamma, 1)`` as one Target term."""
    t = typecheck_source(ctx, e, extensions)
    if t != REAL:
        raise NotScalarOutput(f"gradient needs a real-valued program, got {t}")
    d, e = _differ_for(ctx, e, extensions, reduce_variant)
    return d.gradient_term(ctx, e)


def nabla_sub(ctx: Context, subset: Sequence[str], e: Term, extensions: Iterable[str] = ()) -> Term:
    """Components of the gradient for the names in ``subset``."""
    for n in subset:
        if n not in ctx:
            raise UnknownVariable(n)
    g = gradient(ctx, e, extensions)
    if len(subset) == 1:
        return Proj(ctx.pos(subset[0]), g)
    name = NameSupply(all_names(g)).fresh("g")
    return Let(name, g, Tuple(tuple(Proj(ctx.pos(n), Var(name)) for n in subset)))
