"""Derivative clauses beyond the base Source language.

* reduce with a body that mentions context variables,
* conditionals, using the linear "blend the branch gradients" form,
* ``foldl`` and ``map``, built on the pair-returning scans.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

from .core import (
    REAL, Apply, Arr, Binary, Const, Context, Foldl, If, Let, LetTuple, Map, Map2, NameSupply,
    Prod, Proj, Real, Reduce, ScanlPair, ScanrPair, Scanr, Term, Tuple, Type, Var,
)
from .errors import NonScalarBranches, TypeMismatch
from .reverse import hat_add, scale

if TYPE_CHECKING:
    from .reverse import Differ, SubGradient


class MulMonoid:
    """The multiplicative monoid (R, *, 1) lifted to ground types."""

    @staticmethod
    def one_of(t: Type, like: Term, supply: NameSupply) -> Term:
        if isinstance(t, Real):
            return Const(1.0)
        if isinstance(t, Arr):
            v = supply.fresh("v")
            return Map(v, MulMonoid.one_of(t.elem, Var(v), supply), like)
        if isinstance(t, Prod):
            return Tuple(tuple(MulMonoid.one_of(s, Proj(i + 1, like), supply)
                               for i, s in enumerate(t.items)))
        raise TypeMismatch("ground type", t, "one")

    @staticmethod
    def hat_mul(t: Type, a: Term, b: Term, supply: NameSupply) -> Term:
        if isinstance(t, Real):
            return Binary("*", a, b)
        if isinstance(t, Arr):
            u, v = supply.fresh("u"), supply.fresh("v")
            return Map2(u, v, MulMonoid.hat_mul(t.elem, Var(u), Var(v), supply), a, b)
        if isinstance(t, Prod):
            return Tuple(tuple(MulMonoid.hat_mul(s, Proj(i + 1, a), Proj(i + 1, b), supply)
                               for i, s in enumerate(t.items)))
        raise TypeMismatch("ground type", t, "hat_mul")


# ---------------------------------------------------------------- reduce / foldl with open bodies


def open_fold_contribution(d: "Differ", gamma: Context, ys: list[Term], sub: "SubGradient",
                           x: str, y: str, A0: Term, A: Term, A3: Term, z: Term,
                           variant: str = "corrected") -> list[Term]:
    """Context cotangents for a fold whose body mentions context entries.

    Step k contributes ``d_c body(A0[k], A[k])`` weighted by the product of
    the later ``d_x body`` factors, which is exactly ``A3[k]``, times ``z``.
    """
    if variant == "uncorrected":
        return _uncorrected_contribution(d, gamma, ys, sub, x, y, A0, A, z)

    def weigh(t: Type, dj: Term) -> Term:
        w, g = d.fresh("w"), d.fresh("g")
        return Map2(w, g, scale(Binary("*", Var(w), z), t, Var(g), d.supply), A3, Map2(x, y, dj, A0, A))

    return d.gamma_contribution(gamma, ys, sub, weigh)


def _uncorrected_contribution(d: "Differ", gamma: Context, ys: list[Term], sub: "SubGradient",
                             x: str, y: str, A0: Term, A: Term, z: Term) -> list[Term]:
    """The naive chain: B1 = scanr 1 * B0, B2 = reduce + 0 B1, add z * B2.

    Kept only to show numerically that it disagrees with finite differences.
    """
    out = list(ys)
    for k, (name, t) in enumerate(gamma):
        if name not in sub.ctx:
            continue
        if not isinstance(t, Real):
            raise TypeMismatch("real context entry", t, "uncorrected reduce variant")
        b0 = Map2(x, y, sub.component(name), A0, A)
        u, v = d.fresh("u"), d.fresh("v")
        b1 = Scanr(u, v, MulMonoid.hat_mul(REAL, Var(u), Var(v), d.supply), Const(1.0), b0)
        p, q = d.fresh("p"), d.fresh("q")
        b2 = Reduce(p, q, Binary("+", Var(p), Var(q)), Const(0.0), b1)
        out[k] = hat_add(t, ys[k], Binary("*", z, b2), d.supply)
    return out


def diff_reduce_general(d: "Differ", gamma: Context, Y: str, e: Reduce) -> Term:
    """The reduce clause with context cotangents; the base clause when the body is closed."""
    return d.diff_reduce(gamma, Y, e)


# ---------------------------------------------------------------- conditionals


def conditional_forward(d: "Differ", gamma: Context, e: If):
    """Branch sub-gradients and the ``b`` / ``bf`` bindings of a conditional."""
    t2 = d.type_of(gamma, e.then)
    t3 = d.type_of(gamma, e.orelse)
    if t2 != REAL or t3 != REAL:
        raise NonScalarBranches(f"branches have types {t2} and {t3}")
    g2 = d.sub_gradient(gamma, (), e.then)
    g3 = d.sub_gradient(gamma, (), e.orelse)
    b, bf = d.fresh("b"), d.fresh("bf")
    binds = [(b, e.cond), (bf, If(Var(b), Const(1.0), Const(0.0)))]
    return binds, b, bf, g2, g3


def blend_branches(d: "Differ", gamma: Context, ys: list[Term], z: Term, bf: str,
                   g2: "SubGradient", g3: "SubGradient") -> list[Term]:
    s = d.supply
    out = list(ys)
    for k, (name, t) in enumerate(gamma):
        parts = []
        if name in g2.ctx:
            parts.append(scale(Var(bf), t, g2.component(name), s))
        if name in g3.ctx:
            parts.append(scale(Binary("-", Const(1.0), Var(bf)), t, g3.component(name), s))
        if not parts:
            continue
        blend = parts[0] if len(parts) == 1 else hat_add(t, parts[0], parts[1], s)
        out[k] = hat_add(t, ys[k], scale(z, t, blend, s), s)
    return out


def diff_conditional(d: "Differ", gamma: Context, Y: str, e: If) -> Term:
    """``if b then e2 else e3`` with the branch gradients blended by ``b`` as 0/1."""
    binds, b, bf, g2, g3 = conditional_forward(d, gamma, e)
    lam = d.cont(gamma, REAL, lambda ys, z: Apply(
        Var(Y), tuple(blend_branches(d, gamma, ys, z, bf, g2, g3))))
    out: Term = Tuple((If(Var(b), e.then, e.orelse), lam))
    for name, bound in reversed(binds):
        out = Let(name, bound, out)
    return out


# ---------------------------------------------------------------- foldl and map


def foldl_forward(d: "Differ", gamma: Context, x: str, y: str, body: Term, v: Term, A: Term):
    """Bindings for the foldl adjoint: intermediates, partials and suffix products.

    Returns the binding list (single names or name pairs), the result name and
    ``(A0, A2, A3, r2)`` together with the body sub-gradient.
    """
    sub = d.sub_gradient(gamma, ((x, REAL), (y, REAL)), body)
    A0, A1, A2, A3 = (d.fresh("A") for _ in range(4))
    r1, r2 = d.fresh("r"), d.fresh("r")
    u, w = d.fresh("u"), d.fresh("v")
    binds = [
        ((A0, r1), ScanlPair(x, y, body, v, A)),
        (A1, Map2(x, y, sub.component(x), Var(A0), A)),
        (A2, Map2(x, y, sub.component(y), Var(A0), A)),
        ((r2, A3), ScanrPair(u, w, Binary("*", Var(u), Var(w)), Const(1.0), Var(A1))),
    ]
    return binds, r1, (A0, A2, A3, r2), sub


def wrap_binds(binds, body: Term) -> Term:
    for names, bound in reversed(binds):
        body = LetTuple(names, bound, body) if isinstance(names, tuple) else Let(names, bound, body)
    return body


def diff_foldl(d: "Differ", gamma: Context, Y: str, e: Foldl) -> Term:
    v, Y1 = d.fresh("a"), d.fresh("Y")
    A, Y2 = d.fresh("A"), d.fresh("Y")
    d1 = d.diff(gamma, Y, e.init)
    d2 = d.diff(gamma.extend(v, REAL), Y1, e.arg)
    binds, r1, (A0, A2, A3, r2), sub = foldl_forward(d, gamma, e.x, e.y, e.body, Var(v), Var(A))

    def foldl_cont(ys, z):
        y1, B = d.fresh("c"), d.fresh("B")
        new_ys, dA = d.fold_adjoint(gamma, ys, e.x, e.y, sub, A0, Var(A), A2, A3, z)
        grads = Tuple((Binary("*", Var(r2), z), dA))
        return LetTuple((y1, B), grads, Apply(Var(Y2), tuple(new_ys) + (Var(y1), Var(B))))

    lam = d.cont(gamma, REAL, foldl_cont)
    out = wrap_binds(binds, Tuple((Var(r1), lam)))
    return LetTuple((v, Y1), d1, LetTuple((A, Y2), d2, out))


def map_adjoint(d: "Differ", gamma: Context, ys: list[Term], x: str, body: Term, A: Term,
                Z: Term) -> tuple[list[Term], Term]:
    sub = d.sub_gradient(gamma, ((x, REAL),), body)

    def weigh(t: Type, dj: Term) -> Term:
        u, v = d.fresh("u"), d.fresh("v")
        return Map2(u, v, scale(Var(u), t, Var(v), d.supply), Z, Map(x, dj, A))

    new_ys = d.gamma_contribution(gamma, ys, sub, weigh)
    u, v = d.fresh("u"), d.fresh("v")
    dA = Map2(u, v, Binary("*", Var(u), Var(v)), Map(x, sub.component(x), A), Z)
    return new_ys, dA


def diff_map(d: "Differ", gamma: Context, Y: str, e: Map) -> Term:
    ta = d.type_of(gamma, e.arg)
    A, Y1 = d.fresh("A"), d.fresh("Y")
    d1 = d.diff(gamma, Y, e.arg)

    def map_cont(ys, Z):
        new_ys, dA = map_adjoint(d, gamma, ys, e.x, e.body, Var(A), Z)
        return Apply(Var(Y1), tuple(new_ys) + (dA,))

    lam = d.cont(gamma, ta, map_cont)
    return LetTuple((A, Y1), d1, Tuple((Map(e.x, e.body, Var(A)), lam)))


__all__ = [
    "MulMonoid", "open_fold_contribution", "diff_reduce_general", "conditional_forward",
    "blend_branches", "diff_conditional", "foldl_forward", "wrap_binds", "diff_foldl",
    "map_adjoint", "diff_map",
]
