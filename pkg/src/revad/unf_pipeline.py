"""The three-stage pipeline: Source -> UNF -> differentiated UNF -> Target.

``to_unf`` flattens a Source term into a sequence of primitives over the list
of live values.  ``diff_unf`` replaces every primitive ``p: S -> S'`` with
``<proj ; p, proj o (proj ; JT p)>``, which threads a continuation slot
through the list.  ``from_unf`` compiles the result back into a Target term
by naming every list position and emitting one ``let`` per primitive.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from . import ops
from .core import (
    REAL, Apply, Binary, Const, Context, Foldl, Fun, If, Lambda, Let, LetTuple, Map, Map2,
    NameSupply, Prod, Proj, Reduce, Term, Tuple, Type, Unary, Var, all_names,
    freshen_source, substitute_many,
)
from .errors import (
    JudgmentMismatch, MalformedDiffImage, NotScalarOutput, UnsupportedConstruct,
)
from .reverse import Differ, hat_add, identity_cont, zero_of
from .typecheck import typecheck_source, typecheck_target
from .unf import (
    INDEXED, JT, Compose, FoldlPrim, IfPrim, Map2Prim, MapPrim, OpPrim, PairPrim, PairTerm,
    ProjPrim, ReducePrim, Seq, TypeList, UnfTerm, VarPrim, leftmost_input, prim_output, seq,
)

# ---------------------------------------------------------------- Source -> UNF


def to_unf(ctx: Context, e: Term, extensions: Iterable[str] = ()) -> UnfTerm:
    """Translate a well-typed Source term; the result maps ``ctx`` to ``ctx, A``."""
    ext = frozenset(extensions)
    typecheck_source(ctx, e, ext)
    return _to_unf(ctx, freshen_source(e, ctx), ext)


def _to_unf(g: Context, e: Term, ext: frozenset[str]) -> UnfTerm:
    T = g.types

    def ty(t: Term) -> Type:
        return typecheck_target(g, t)

    if isinstance(e, Const):
        if isinstance(e.value, bool):
            raise UnsupportedConstruct("boolean constants are only allowed in conditions")
        return OpPrim(T, "const", 0, float(e.value))
    if isinstance(e, Var):
        return VarPrim(T, g.pos(e.name))
    if isinstance(e, Let):
        a = ty(e.bound)
        b = typecheck_target(g.extend(e.name, a), e.body)
        return seq(_to_unf(g, e.bound, ext), _to_unf(g.extend(e.name, a), e.body, ext),
                   ProjPrim(T, (a,), (b,)))
    if isinstance(e, Tuple):
        if len(e.items) != 2:
            raise UnsupportedConstruct("Source products are binary")
        a, b = ty(e.items[0]), ty(e.items[1])
        return seq(_to_unf(g, e.items[0], ext), weaken_tilde(_to_unf(g, e.items[1], ext), a),
                   PairPrim(T, Prod((a, b))))
    if isinstance(e, Proj):
        p = ty(e.arg)
        return seq(_to_unf(g, e.arg, ext), OpPrim(T, f"pi{e.index}", 1),
                   ProjPrim(T, (p,), (p.items[e.index - 1],)))
    if isinstance(e, Unary):
        return seq(_to_unf(g, e.arg, ext), OpPrim(T, e.op, 1), ProjPrim(T, (REAL,), (REAL,)))
    if isinstance(e, Binary):
        return seq(_to_unf(g, e.left, ext), weaken_tilde(_to_unf(g, e.right, ext), REAL),
                   OpPrim(T, e.op, 2), ProjPrim(T, (REAL, REAL), (REAL,)))
    if isinstance(e, Map2):
        a, b = ty(e.left), ty(e.right)
        out = ty(e)
        return seq(_to_unf(g, e.left, ext), weaken_tilde(_to_unf(g, e.right, ext), a),
                   Map2Prim(g, e.x, e.y, e.body), ProjPrim(T, (a, b), (out,)))
    if isinstance(e, Reduce):
        a = ty(e.arg)
        return seq(_to_unf(g, e.arg, ext), ReducePrim(g, e.x, e.y, e.body, e.init),
                   ProjPrim(T, (a,), (ty(e),)))
    if isinstance(e, Map) and "foldl" in ext:
        a = ty(e.arg)
        return seq(_to_unf(g, e.arg, ext), MapPrim(g, e.x, e.body), ProjPrim(T, (a,), (ty(e),)))
    if isinstance(e, Foldl) and "foldl" in ext:
        v, a = ty(e.init), ty(e.arg)
        return seq(_to_unf(g, e.init, ext), weaken_tilde(_to_unf(g, e.arg, ext), v),
                   FoldlPrim(g, e.x, e.y, e.body), ProjPrim(T, (v, a), (ty(e),)))
    if isinstance(e, If) and "cond" in ext:
        return IfPrim(g, e.cond, e.then, e.orelse)
    raise UnsupportedConstruct(f"no UNF translation for {type(e).__name__}")


def weaken_tilde(e: UnfTerm, A: Type, k: Optional[int] = None) -> UnfTerm:
    """Thread one extra list entry of type ``A`` through ``e``.

    The entry is inserted at position ``k`` (0-based; by default right after
    the input context of ``e``), so ``e: G -> G, B`` becomes ``G, A -> G, A, B``.
    """
    if k is None:
        k = len(leftmost_input(e))

    def ins(T: TypeList, where: str) -> TypeList:
        if len(T) < k:
            raise JudgmentMismatch(f"{where}: index shorter than the weakening position {k}")
        return tuple(T[:k]) + (A,) + tuple(T[k:])

    def ins_ctx(c: Context, *terms: Term) -> Context:
        if len(c) < k:
            raise JudgmentMismatch(f"context shorter than the weakening position {k}")
        avoid = set(c.names)
        for t in terms:
            avoid |= all_names(t)
        name = NameSupply(avoid).fresh("w")
        entries = list(c.entries)
        entries.insert(k, (name, A))
        return Context(tuple(entries))

    def go(t: UnfTerm) -> UnfTerm:
        if isinstance(t, Seq):
            return Seq(go(t.first), go(t.second))
        if isinstance(t, VarPrim):
            return VarPrim(ins(t.T, "var"), t.i + 1 if t.i > k else t.i)
        if isinstance(t, OpPrim):
            return OpPrim(ins(t.T, t.op), t.op, t.n, t.value)
        if isinstance(t, PairPrim):
            return PairPrim(ins(t.T, "pair"), t.result)
        if isinstance(t, ProjPrim):
            return ProjPrim(ins(t.T1, "proj"), t.T2, t.T3)
        if isinstance(t, Map2Prim):
            return Map2Prim(ins_ctx(t.ctx, t.body), t.x, t.y, t.body)
        if isinstance(t, ReducePrim):
            return ReducePrim(ins_ctx(t.ctx, t.body, t.init), t.x, t.y, t.body, t.init)
        if isinstance(t, MapPrim):
            return MapPrim(ins_ctx(t.ctx, t.body), t.x, t.body)
        if isinstance(t, FoldlPrim):
            return FoldlPrim(ins_ctx(t.ctx, t.body), t.x, t.y, t.body)
        if isinstance(t, IfPrim):
            return IfPrim(ins_ctx(t.ctx, t.cond, t.then, t.orelse), t.cond, t.then, t.orelse)
        raise JudgmentMismatch(f"cannot weaken {type(t).__name__}")

    return go(e)


# ---------------------------------------------------------------- differentiation


def diff_unf(rho: Type, e: UnfTerm, T1: Optional[Sequence[Type]] = None) -> UnfTerm:
    """Differentiate a Source UNF term ``T1 -> T2`` into ``T1, (T1 -> rho) -> T2, (T2 -> rho)``."""
    S0 = tuple(T1) if T1 is not None else leftmost_input(e)

    def go(t: UnfTerm, S: TypeList) -> tuple[UnfTerm, TypeList]:
        if isinstance(t, Seq):
            d1, S1 = go(t.first, S)
            d2, S2 = go(t.second, S1)
            return Seq(d1, d2), S2
        out = prim_output(t, S)
        F = Fun(S, rho)
        primal = Seq(ProjPrim(S, (F,), ()), t)
        back = Compose(ProjPrim((), S, (F,)), Seq(ProjPrim(S, (F,), ()), JT(t)))
        return PairTerm(primal, back), out

    return go(e, S0)[0]


# ---------------------------------------------------------------- UNF -> Target


class _Compiler:
    """Names every list position and emits one binding per primitive."""

    def __init__(self, supply: NameSupply, extensions: Iterable[str]) -> None:
        self.supply = supply
        self.differ = Differ(supply, extensions)
        self.binds: list[tuple[object, Term]] = []

    def emit(self, term: Term, base: str = "x") -> Var:
        name = self.supply.fresh(base)
        self.binds.append((name, term))
        return Var(name)

    def run(self, e: UnfTerm, vs: list[Var], S: TypeList) -> tuple[list[Var], TypeList]:
        if isinstance(e, Seq):
            vs, S = self.run(e.first, vs, S)
            return self.run(e.second, vs, S)
        if isinstance(e, PairTerm):
            v1, S1 = self.run(e.left, vs, S)
            v2, S2 = self.run(e.right, vs, S)
            return v1 + v2, S1 + S2
        if isinstance(e, Compose):
            return self.compose(e, vs, S)
        if isinstance(e, JT):
            return self.transpose(e.prim, vs, S)
        out = prim_output(e, S)
        if isinstance(e, ProjPrim):
            n1, n2 = len(e.T1), len(e.T2)
            return vs[:n1] + vs[n1 + n2:], out
        if isinstance(e, PairPrim):
            return vs[:-2] + [self.emit(Tuple((vs[-2], vs[-1])))], out
        return vs + [self.emit(self.forward(e, vs))], out

    # -- forward primitives
    def forward(self, p: UnfTerm, vs: list[Var]) -> Term:
        if isinstance(p, VarPrim):
            return vs[p.i - 1]
        if isinstance(p, OpPrim):
            if p.op == "const":
                return Const(p.value)
            if p.op in ("pi1", "pi2"):
                return Proj(int(p.op[2]), vs[-1])
            if p.n == 1:
                return Unary(p.op, vs[-1])
            return Binary(p.op, vs[-2], vs[-1])
        if isinstance(p, INDEXED):
            return self.localize(p, vs)[1]
        raise MalformedDiffImage(f"unexpected primitive {type(p).__name__}")

    def localize(self, p: UnfTerm, vs: list[Var]) -> tuple[Context, Term]:
        """The indexed primitive as a Target term over the positional names."""
        n = len(p.ctx)
        ren = {name: vs[j] for j, name in enumerate(p.ctx.names)}
        gamma = Context(tuple((vs[j].name, t) for j, t in enumerate(p.ctx.types)))
        if isinstance(p, Map2Prim):
            t: Term = Map2(p.x, p.y, p.body, vs[n], vs[n + 1])
        elif isinstance(p, ReducePrim):
            t = Reduce(p.x, p.y, p.body, p.init, vs[n])
        elif isinstance(p, MapPrim):
            t = Map(p.x, p.body, vs[n])
        elif isinstance(p, FoldlPrim):
            t = Foldl(p.x, p.y, p.body, vs[n], vs[n + 1])
        else:
            t = If(p.cond, p.then, p.orelse)
        return gamma, substitute_many(t, ren)

    # -- continuations
    def compose(self, e: Compose, vs: list[Var], S: TypeList) -> tuple[list[Var], TypeList]:
        (k,), (kt,) = self.run(e.cont, vs, S)
        (j,), (jt,) = self.run(e.jac, vs, S)
        if not (isinstance(kt, Fun) and isinstance(jt, Fun) and Prod(kt.dom) == jt.cod):
            raise MalformedDiffImage("compose needs matching continuation and Jacobian")
        s = [self.supply.fresh("s") for _ in jt.dom]
        t = [self.supply.fresh("t") for _ in kt.dom]
        body = LetTuple(tuple(t), Apply(j, tuple(Var(a) for a in s)),
                        Apply(k, tuple(Var(a) for a in t)))
        ft = Fun(jt.dom, kt.cod)
        return [self.emit(Lambda(tuple(s), body, jt.dom), "k")], (ft,)

    def transpose(self, p: UnfTerm, vs: list[Var], S: TypeList) -> tuple[list[Var], TypeList]:
        out = prim_output(p, S)
        cs = [self.supply.fresh("c") for _ in out]
        cv = [Var(c) for c in cs]
        cots = self.cotangents(p, vs, S, cv)
        lam = Lambda(tuple(cs), Tuple(tuple(cots)), out)
        return [self.emit(lam, "j")], (Fun(out, Prod(S)),)

    def cotangents(self, p: UnfTerm, vs: list[Var], S: TypeList, cv: list[Var]) -> list[Term]:
        """Input cotangents of ``p`` given output cotangents ``cv``."""
        s = self.supply
        if isinstance(p, VarPrim):
            out: list[Term] = list(cv[:-1])
            out[p.i - 1] = hat_add(S[p.i - 1], cv[p.i - 1], cv[-1], s)
            return out
        if isinstance(p, OpPrim):
            out = list(cv[:-1])
            z = cv[-1]
            if p.op == "const":
                return out
            if p.op in ("pi1", "pi2"):
                i = int(p.op[2])
                pt = S[-1]
                inj = Tuple(tuple(z if k == i else zero_of(u, Proj(k, vs[-1]), s)
                                  for k, u in enumerate(pt.items, start=1)))
                out[-1] = hat_add(pt, out[-1], inj, s)
                return out
            if p.n == 1:
                dx = ops.OP1[p.op].deriv(vs[-1])
                out[-1] = Binary("+", out[-1], Binary("*", dx, z))
                return out
            op = ops.OP2[p.op]
            a, b = vs[-2], vs[-1]
            out[-2] = Binary("+", out[-2], Binary("*", op.d1(a, b), z))
            out[-1] = Binary("+", out[-1], Binary("*", op.d2(a, b), z))
            return out
        if isinstance(p, PairPrim):
            z = cv[-1]
            return list(cv[:-1]) + [Proj(1, z), Proj(2, z)]
        if isinstance(p, ProjPrim):
            n1 = len(p.T1)
            zeros = [zero_of(t, vs[n1 + j], s) for j, t in enumerate(p.T2)]
            return list(cv[:n1]) + zeros + list(cv[n1:])
        if isinstance(p, INDEXED):
            return self.indexed_cotangents(p, vs, S, cv)
        raise MalformedDiffImage(f"no transpose Jacobian for {type(p).__name__}")

    def indexed_cotangents(self, p, vs, S, cv) -> list[Term]:
        from .extensions import (
            blend_branches, conditional_forward, foldl_forward, map_adjoint,
        )

        s, d = self.supply, self.differ
        gamma, t = self.localize(p, vs)
        n = len(gamma)
        ys: list[Term] = list(cv[:n])
        z = cv[-1]
        if isinstance(p, Map2Prim):
            new_ys, da, db = d.map2_adjoint(gamma, ys, t.x, t.y, t.body, t.left, t.right, z)
            return new_ys + [hat_add(S[n], cv[n], da, s), hat_add(S[n + 1], cv[n + 1], db, s)]
        if isinstance(p, MapPrim):
            new_ys, dA = map_adjoint(d, gamma, ys, t.x, t.body, t.arg, z)
            return new_ys + [hat_add(S[n], cv[n], dA, s)]
        if isinstance(p, ReducePrim):
            chain, (A0, _, A2, A3), sub = d.reduce_forward(gamma, t.x, t.y, t.body, t.init, t.arg)
            self.binds.extend(chain)
            new_ys, dA = d.fold_adjoint(gamma, ys, t.x, t.y, sub, A0, t.arg, A2, A3, z)
            return new_ys + [hat_add(S[n], cv[n], dA, s)]
        if isinstance(p, FoldlPrim):
            binds, _, (A0, A2, A3, r2), sub = foldl_forward(d, gamma, t.x, t.y, t.body,
                                                            t.init, t.arg)
            self.binds.extend(binds)
            new_ys, dA = d.fold_adjoint(gamma, ys, t.x, t.y, sub, A0, t.arg, A2, A3, z)
            return new_ys + [Binary("+", cv[n], Binary("*", Var(r2), z)),
                             hat_add(S[n + 1], cv[n + 1], dA, s)]
        if isinstance(p, IfPrim):
            binds, _, bf, g2, g3 = conditional_forward(d, gamma, t)
            self.binds.extend(binds)
            return blend_branches(d, gamma, ys, z, bf, g2, g3)
        raise MalformedDiffImage(f"no transpose Jacobian for {type(p).__name__}")


def _names_in(e: UnfTerm) -> set[str]:
    out: set[str] = set()

    def go(t: UnfTerm) -> None:
        if isinstance(t, Seq):
            go(t.first), go(t.second)
        elif isinstance(t, PairTerm):
            go(t.left), go(t.right)
        elif isinstance(t, Compose):
            go(t.cont), go(t.jac)
        elif isinstance(t, JT):
            go(t.prim)
        elif isinstance(t, INDEXED):
            out.update(t.ctx.names)
            for f in ("body", "init", "cond", "then", "orelse"):
                if hasattr(t, f):
                    out.update(all_names(getattr(t, f)))

    go(e)
    return out


def from_unf(e: UnfTerm, T1: Optional[Sequence[Type]] = None,
             names: Optional[Sequence[str]] = None, extensions: Iterable[str] = (),
             supply: Optional[NameSupply] = None) -> Term:
    """Compile a differentiated UNF term to ``<result, continuation>``.

    ``T1`` is the input list ``T, (T -> rho)``; input positions are named
    ``names`` when given, otherwise ``x1 .. xn`` by position.
    """
    S = tuple(T1) if T1 is not None else leftmost_input(e)
    if not S or not isinstance(S[-1], Fun):
        raise MalformedDiffImage("input list must end with a continuation type")
    supply = supply or NameSupply()
    supply.avoid(_names_in(e))
    if names is None:
        names = [supply.fresh("x") for _ in S]
    elif len(names) != len(S):
        raise MalformedDiffImage(f"{len(names)} names for {len(S)} inputs")
    supply.avoid(names)
    comp = _Compiler(supply, extensions)
    try:
        vs, out = comp.run(e, [Var(n) for n in names], S)
    except JudgmentMismatch as err:
        raise MalformedDiffImage(str(err)) from err
    if len(out) < 2 or not isinstance(out[-1], Fun) or out[-1].dom != out[:-1]:
        raise MalformedDiffImage("output list is not of the form T, (T -> rho)")
    from .extensions import wrap_binds

    return wrap_binds(comp.binds, Tuple((vs[-2], vs[-1])))


def pipeline_gradient(ctx: Context, e: Term, extensions: Iterable[str] = ()) -> Term:
    """The gradient through Source -> UNF -> D -> Target, seeded like the direct macro."""
    ext = tuple(extensions)
    t = typecheck_source(ctx, e, ext)
    if t != REAL:
        raise NotScalarOutput(f"gradient needs a real-valued program, got {t}")
    e = freshen_source(e, ctx)
    S = ctx.types
    rho = Prod(S)
    d = diff_unf(rho, _to_unf(ctx, e, frozenset(ext)), S)
    supply = NameSupply(set(ctx.names) | all_names(e))
    Y = supply.fresh("Y")
    body = from_unf(d, S + (Fun(S, rho),), list(ctx.names) + [Y], ext, supply)
    seeds = tuple(zero_of(ty, Var(n), supply) for n, ty in ctx) + (Const(1.0),)
    return Let(Y, identity_cont(ctx, supply), Apply(Proj(2, body), seeds))


__all__ = ["to_unf", "weaken_tilde", "diff_unf", "from_unf", "pipeline_gradient"]
