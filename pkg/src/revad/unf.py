"""Unary Normal Form: a variable-free IR whose primitives act on type lists.

Every primitive receives the whole list of live values and returns it
extended (or, for ``proj``, pruned).  Primitives are indexed by the part of
the list they do not consume, following the worked ``cos ; pair`` example:
``cos[T]`` maps ``T, real`` to ``T, real, real``.

The constructor set is the one fixed by the translation into UNF (every
primitive it emits), plus what the derivative images need.  Typing rules
beyond those are marked "reconstructed".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from . import ops
from .core import (
    BOOL, REAL, Arr, Context, Fun, Prod, Real, Term, TVar, Type,
)
from .errors import JudgmentMismatch, MissingContinuationSlot
from .typecheck import typecheck_target

TypeList = tuple[Type, ...]


class UnfTerm:
    __slots__ = ()

    def __str__(self) -> str:
        return print_unf(self)


# ---------------------------------------------------------------- Source UNF primitives


@dataclass(frozen=True, slots=True)
class VarPrim(UnfTerm):
    """``var[T;i]``: T -> T, T_i."""

    T: TypeList
    i: int


@dataclass(frozen=True, slots=True)
class OpPrim(UnfTerm):
    """``op[T;n]``: T, operands -> T, operands, result.

    ``op`` is a registry name, ``"const"`` (n = 0, with ``value``) or
    ``"pi1"``/``"pi2"`` for projections seen as unary operators.
    """

    T: TypeList
    op: str
    n: int
    value: Optional[float] = None


@dataclass(frozen=True, slots=True)
class PairPrim(UnfTerm):
    """``pair[T; A*B]``: T, A, B -> T, A*B."""

    T: TypeList
    result: Prod


@dataclass(frozen=True, slots=True)
class ProjPrim(UnfTerm):
    """``proj[T1;T2;T3]``: T1, T2, T3 -> T1, T3."""

    T1: TypeList
    T2: TypeList
    T3: TypeList


@dataclass(frozen=True, slots=True)
class Seq(UnfTerm):
    first: UnfTerm
    second: UnfTerm


@dataclass(frozen=True, slots=True)
class Map2Prim(UnfTerm):
    """``map2[G; x y. e]``: G, real^n, real^n -> G, real^n, real^n, real^n."""

    ctx: Context
    x: str
    y: str
    body: Term


@dataclass(frozen=True, slots=True)
class ReducePrim(UnfTerm):
    """``reduce[G; x y. e; init]``: G, real^n -> G, real^n, real."""

    ctx: Context
    x: str
    y: str
    body: Term
    init: Term


# Extension primitives (reconstructed, following the recipe for adding constructs).


@dataclass(frozen=True, slots=True)
class MapPrim(UnfTerm):
    """``map[G; x. e]``: G, real^n -> G, real^n, real^n."""

    ctx: Context
    x: str
    body: Term


@dataclass(frozen=True, slots=True)
class FoldlPrim(UnfTerm):
    """``foldl[G; x y. e]``: G, real, real^n -> G, real, real^n, real."""

    ctx: Context
    x: str
    y: str
    body: Term


@dataclass(frozen=True, slots=True)
class IfPrim(UnfTerm):
    """``if[G; c; e2; e3]``: G -> G, real, with the whole conditional as an index."""

    ctx: Context
    cond: Term
    then: Term
    orelse: Term


INDEXED = (Map2Prim, ReducePrim, MapPrim, FoldlPrim, IfPrim)
BASE_PRIMS = (VarPrim, OpPrim, PairPrim, ProjPrim) + INDEXED


# ---------------------------------------------------------------- Target UNF additions


@dataclass(frozen=True, slots=True)
class JT(UnfTerm):
    """Transpose Jacobian of a base primitive ``p: S -> S'``.

    ``JT p : S -> [S' -> S]``: from the primal inputs it builds the function
    mapping output cotangents to input cotangents (returned as one tuple).
    """

    prim: UnfTerm


@dataclass(frozen=True, slots=True)
class Compose(UnfTerm):
    """``k o j``: pre-compose the continuation produced by ``k`` with ``j``."""

    cont: UnfTerm
    jac: UnfTerm


@dataclass(frozen=True, slots=True)
class PairTerm(UnfTerm):
    """``<e1, e2>``: run both on the same input and concatenate the outputs."""

    left: UnfTerm
    right: UnfTerm


def seq(*terms: UnfTerm) -> UnfTerm:
    """Right-nested sequential composition."""
    if not terms:
        raise ValueError("seq needs at least one term")
    out = terms[-1]
    for t in reversed(terms[:-1]):
        out = Seq(t, out)
    return out


def flatten_seq(e: UnfTerm) -> list[UnfTerm]:
    if isinstance(e, Seq):
        return flatten_seq(e.first) + flatten_seq(e.second)
    return [e]


# ---------------------------------------------------------------- typing


def _mismatch(expected, found, where: str) -> JudgmentMismatch:
    return JudgmentMismatch(f"{where}: expected {_types(expected)}, found {_types(found)}", expected, found)


def _prefix(S: TypeList, T: TypeList, extra: int, where: str) -> TypeList:
    """Check ``S = T, <extra entries>`` and return the extra entries."""
    if len(S) != len(T) + extra or tuple(S[: len(T)]) != tuple(T):
        raise _mismatch(tuple(T) + ("?",) * extra, S, where)
    return tuple(S[len(T):])


def _body_type(ctx: Context, binders: Sequence[tuple[str, Type]], body: Term) -> Type:
    inner = ctx
    for n, t in binders:
        inner = inner.extend(n, t)
    return typecheck_target(inner, body)


def prim_output(p: UnfTerm, S: TypeList) -> TypeList:
    """Output type list of a base primitive applied to input ``S``."""
    S = tuple(S)
    if isinstance(p, VarPrim):
        if tuple(p.T) != S:
            raise _mismatch(p.T, S, "var")
        if not 1 <= p.i <= len(S):
            raise JudgmentMismatch(f"var index {p.i} outside {_types(S)}")
        return S + (S[p.i - 1],)
    if isinstance(p, OpPrim):
        args = _prefix(S, p.T, p.n, p.op)
        if p.op == "const":
            return S + (REAL,)
        if p.op in ("pi1", "pi2"):
            if len(args) != 1 or not isinstance(args[0], Prod) or len(args[0].items) != 2:
                raise _mismatch(("pair",), args, p.op)
            return S + (args[0].items[int(p.op[2]) - 1],)
        for a in args:
            if a != REAL:
                raise _mismatch((REAL,) * p.n, args, p.op)
        if p.op in ops.PREDICATES:
            return S + (BOOL,)
        return S + (REAL,)
    if isinstance(p, PairPrim):
        args = _prefix(S, p.T, 2, "pair")
        if Prod(args) != p.result:
            raise _mismatch(p.result.items, args, "pair")
        return tuple(p.T) + (p.result,)
    if isinstance(p, ProjPrim):
        whole = tuple(p.T1) + tuple(p.T2) + tuple(p.T3)
        if whole != S:
            raise _mismatch(whole, S, "proj")
        return tuple(p.T1) + tuple(p.T3)
    if isinstance(p, Map2Prim):
        a, b = _prefix(S, p.ctx.types, 2, "map2")
        if not (isinstance(a, Arr) and isinstance(b, Arr) and a.size == b.size):
            raise _mismatch(("real^n", "real^n"), (a, b), "map2")
        tb = _body_type(p.ctx, ((p.x, a.elem), (p.y, b.elem)), p.body)
        return S + (Arr(a.size, tb),)
    if isinstance(p, ReducePrim):
        (a,) = _prefix(S, p.ctx.types, 1, "reduce")
        if not isinstance(a, Arr):
            raise _mismatch(("real^n",), (a,), "reduce")
        ti = typecheck_target(p.ctx, p.init)
        _body_type(p.ctx, ((p.x, ti), (p.y, a.elem)), p.body)
        return S + (ti,)
    if isinstance(p, MapPrim):
        (a,) = _prefix(S, p.ctx.types, 1, "map")
        if not isinstance(a, Arr):
            raise _mismatch(("real^n",), (a,), "map")
        return S + (Arr(a.size, _body_type(p.ctx, ((p.x, a.elem),), p.body)),)
    if isinstance(p, FoldlPrim):
        v, a = _prefix(S, p.ctx.types, 2, "foldl")
        if not isinstance(a, Arr):
            raise _mismatch(("real", "real^n"), (v, a), "foldl")
        _body_type(p.ctx, ((p.x, v), (p.y, a.elem)), p.body)
        return S + (v,)
    if isinstance(p, IfPrim):
        _prefix(S, p.ctx.types, 0, "if")
        from .core import If

        return S + (typecheck_target(p.ctx, If(p.cond, p.then, p.orelse)),)
    raise JudgmentMismatch(f"not a base primitive: {type(p).__name__}")


def typecheck_unf_source(T1: Sequence[Type], e: UnfTerm) -> TypeList:
    """The output list T2 with (T1, e, T2) derivable in Source UNF."""
    if isinstance(e, Seq):
        return typecheck_unf_source(typecheck_unf_source(T1, e.first), e.second)
    if isinstance(e, BASE_PRIMS):
        return prim_output(e, tuple(T1))
    raise JudgmentMismatch(f"{type(e).__name__} is not part of Source UNF")


def _last_fun(L: TypeList, where: str) -> Fun:
    if not L or not isinstance(L[-1], Fun):
        raise MissingContinuationSlot(f"{where}: {_types(L)} has no trailing function type")
    return L[-1]


def typecheck_unf_target(T1: Sequence[Type], e: UnfTerm) -> TypeList:
    T1 = tuple(T1)
    if isinstance(e, Seq):
        return typecheck_unf_target(typecheck_unf_target(T1, e.first), e.second)
    if isinstance(e, BASE_PRIMS):
        return prim_output(e, T1)
    if isinstance(e, JT):
        out = prim_output(e.prim, T1)
        return (Fun(out, Prod(T1)),)
    if isinstance(e, PairTerm):
        return typecheck_unf_target(T1, e.left) + typecheck_unf_target(T1, e.right)
    if isinstance(e, Compose):
        c = typecheck_unf_target(T1, e.cont)
        j = typecheck_unf_target(T1, e.jac)
        if len(c) != 1 or len(j) != 1:
            raise JudgmentMismatch("compose operands must each produce one function")
        k, f = _last_fun(c, "compose"), _last_fun(j, "compose")
        if Prod(k.dom) != f.cod:
            raise _mismatch(k.dom, f.cod.items if isinstance(f.cod, Prod) else (f.cod,), "compose")
        return (Fun(f.dom, k.cod),)
    raise JudgmentMismatch(f"unknown UNF term {type(e).__name__}")


def continuation_type(T: Sequence[Type], rho: Type = TVar()) -> Fun:
    return Fun(tuple(T), rho)


def leftmost_input(e: UnfTerm) -> TypeList:
    """The input list of ``e`` when its first primitive determines it."""
    while isinstance(e, (Seq, PairTerm, Compose)):
        e = e.first if isinstance(e, Seq) else (e.left if isinstance(e, PairTerm) else e.cont)
    if isinstance(e, VarPrim):
        return tuple(e.T)
    if isinstance(e, OpPrim) and e.n == 0:
        return tuple(e.T)
    if isinstance(e, ProjPrim):
        return tuple(e.T1) + tuple(e.T2) + tuple(e.T3)
    if isinstance(e, IfPrim):
        return e.ctx.types
    raise JudgmentMismatch(f"cannot infer the input of a term starting with {type(e).__name__}")


# ---------------------------------------------------------------- printing


def _type(t: Type, inner: bool = False) -> str:
    if isinstance(t, Real):
        return "R"
    if isinstance(t, Arr):
        return f"R[{t.size}]" if isinstance(t.elem, Real) else f"({_type(t.elem)})[{t.size}]"
    if isinstance(t, Prod):
        s = "x".join(_type(a, True) for a in t.items)
        return f"({s})" if inner else s
    if isinstance(t, Fun):
        dom = "x".join(_type(a, True) for a in t.dom) or "()"
        s = f"{dom}->{_type(t.cod, True)}"
        return f"({s})" if inner else s
    return str(t)


def _types(ts) -> str:
    ts = tuple(ts)
    if not ts:
        return "[]"
    return ",".join(_type(t) if isinstance(t, Type) else str(t) for t in ts)


def _ctx(ctx: Context) -> str:
    return ",".join(f"{n}:{_type(t)}" for n, t in ctx) or "[]"


def print_unf(e: UnfTerm) -> str:
    """Subscripted text form, e.g. ``cos_{R,R} ; pair_{R,R;RxR}``."""
    from .syntax import format_number, print_term

    if isinstance(e, VarPrim):
        return f"var_{{{_types(e.T)};{e.i}}}"
    if isinstance(e, OpPrim):
        if e.op == "const":
            return f"{format_number(e.value)}_{{{_types(e.T)};0}}"
        if e.n == 1:
            return f"{e.op}_{{{_types(e.T)}}}"
        return f"{e.op}_{{{_types(e.T)};{e.n}}}"
    if isinstance(e, PairPrim):
        return f"pair_{{{_types(e.T)};{_type(e.result)}}}"
    if isinstance(e, ProjPrim):
        return f"proj_{{{_types(e.T1)};{_types(e.T2)};{_types(e.T3)}}}"
    if isinstance(e, Map2Prim):
        return f"map2_{{{_ctx(e.ctx)};{e.x} {e.y}. {print_term(e.body)}}}"
    if isinstance(e, ReducePrim):
        return f"reduce_{{{_ctx(e.ctx)};{e.x} {e.y}. {print_term(e.body)};{print_term(e.init)}}}"
    if isinstance(e, MapPrim):
        return f"map_{{{_ctx(e.ctx)};{e.x}. {print_term(e.body)}}}"
    if isinstance(e, FoldlPrim):
        return f"foldl_{{{_ctx(e.ctx)};{e.x} {e.y}. {print_term(e.body)}}}"
    if isinstance(e, IfPrim):
        return (f"if_{{{_ctx(e.ctx)};{print_term(e.cond)};{print_term(e.then)};"
                f"{print_term(e.orelse)}}}")
    if isinstance(e, Seq):
        return f"{print_unf(e.first)} ; {print_unf(e.second)}"
    if isinstance(e, JT):
        return f"JT {print_unf(e.prim)}"
    if isinstance(e, Compose):
        return f"{_atom(e.cont)} o ({print_unf(e.jac)})"
    if isinstance(e, PairTerm):
        return f"<{print_unf(e.left)}, {print_unf(e.right)}>"
    raise TypeError(f"cannot print {e!r}")


def _atom(e: UnfTerm) -> str:
    s = print_unf(e)
    return f"({s})" if isinstance(e, (Seq, Compose)) else s
