"""Static cost model, array-nesting depth and the cheap-gradient check.

Costs count (MOVES, ADDS, MULTS, NLOPS).  Rows not covered by the base
model (n-ary tuples, destructuring lets, ``map``, ``foldl``, the pair scans,
conditionals) are extrapolations recorded in the decision log.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from . import ops
from .core import (
    BOOL, Apply, Arr, ArrayLit, Binary, Const, Context, Fold, Foldl, Fun, If, Lambda, Let, LetTuple,
    Map, Map2, Proj, Reduce, Scanl, ScanlPair, Scanr, ScanrPair, Shift1L, Shift1R, Term, Tuple,
    Type, Unary, Var, is_ground,
)
from .errors import NotInRestrictedFragment
from .typecheck import type_in_env


@dataclass(frozen=True)
class CostVector:
    moves: int = 0
    adds: int = 0
    mults: int = 0
    nlops: int = 0

    def __add__(self, other: "CostVector") -> "CostVector":
        return CostVector(self.moves + other.moves, self.adds + other.adds,
                          self.mults + other.mults, self.nlops + other.nlops)

    def __rmul__(self, k: int) -> "CostVector":
        return CostVector(k * self.moves, k * self.adds, k * self.mults, k * self.nlops)

    __mul__ = __rmul__

    def __le__(self, other: "CostVector") -> bool:
        return all(a <= b for a, b in zip(self.as_tuple(), other.as_tuple()))

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.moves, self.adds, self.mults, self.nlops)

    def total(self) -> int:
        return sum(self.as_tuple())

    def max(self, other: "CostVector") -> "CostVector":
        return CostVector(*(max(a, b) for a, b in zip(self.as_tuple(), other.as_tuple())))

    @classmethod
    def of(cls, t: tuple[int, int, int, int]) -> "CostVector":
        return cls(*t)


ZERO = CostVector()
MOVE = CostVector(1, 0, 0, 0)


def _moves(n: int) -> CostVector:
    return CostVector(n, 0, 0, 0)


class _Cost:
    def array(self, env: dict[str, Type], e: Term) -> Arr:
        t = type_in_env(env, e)
        if not isinstance(t, Arr):
            raise NotInRestrictedFragment(f"expected an array at {e}")
        return t

    def go(self, env: dict[str, Type], e: Term) -> CostVector:
        if isinstance(e, (Lambda, Apply)):
            raise NotInRestrictedFragment(f"{type(e).__name__} at {e}")
        if isinstance(e, Const):
            return MOVE
        if isinstance(e, Var):
            t = env.get(e.name)
            if t is not None and not is_ground(t) and t != BOOL:
                raise NotInRestrictedFragment(f"higher-order variable {e.name}")
            return MOVE
        if isinstance(e, Unary):
            c = ops.OP1[e.op].cost if e.op in ops.OP1 else ops.PREDICATE_COST
            return CostVector.of(c) + self.go(env, e.arg)
        if isinstance(e, Binary):
            return CostVector.of(ops.OP2[e.op].cost) + self.go(env, e.left) + self.go(env, e.right)
        if isinstance(e, (Tuple, ArrayLit)):
            out = ZERO
            for a in e.items:
                out = out + self.go(env, a)
            return out
        if isinstance(e, Proj):
            return MOVE + self.go(env, e.arg)
        if isinstance(e, Let):
            inner = dict(env)
            inner[e.name] = type_in_env(env, e.bound)
            return MOVE + self.go(env, e.bound) + self.go(inner, e.body)
        if isinstance(e, LetTuple):
            t = type_in_env(env, e.bound)
            inner = dict(env)
            inner.update(zip(e.names, t.items))
            return _moves(len(e.names)) + self.go(env, e.bound) + self.go(inner, e.body)
        if isinstance(e, If):
            c = self.go(env, e.cond)
            return MOVE + c + self.go(env, e.then).max(self.go(env, e.orelse))
        if isinstance(e, Map2):
            a, b = self.array(env, e.left), self.array(env, e.right)
            inner = dict(env, **{e.x: a.elem, e.y: b.elem})
            return (a.size * (self.go(inner, e.body) + _moves(2))
                    + self.go(env, e.left) + self.go(env, e.right))
        if isinstance(e, Map):
            a = self.array(env, e.arg)
            inner = dict(env, **{e.x: a.elem})
            return a.size * (self.go(inner, e.body) + _moves(1)) + self.go(env, e.arg)
        if isinstance(e, Fold):
            a = self.array(env, e.arg)
            n = a.size
            ti = type_in_env(env, e.init)
            inner = dict(env, **{e.x: ti, e.y: a.elem})
            per = {Reduce: 2, Foldl: 2, Scanl: 3, Scanr: 3, ScanlPair: 3, ScanrPair: 3}[type(e)]
            extra = MOVE if isinstance(e, (ScanlPair, ScanrPair)) else ZERO
            return (n * (self.go(inner, e.body) + _moves(per)) + extra
                    + self.go(env, e.init) + self.go(env, e.arg))
        if isinstance(e, (Shift1L, Shift1R)):
            return self.go(env, e.arg) + _moves(self.array(env, e).size)
        raise NotInRestrictedFragment(f"no cost rule for {type(e).__name__}")


def cost(e: Term, ctx: Context = Context()) -> CostVector:
    """Cost of a lambda-free Target term; array sizes come from ``ctx``."""
    env = dict(ctx.entries)
    for n, t in ctx:
        if isinstance(t, Fun):
            raise NotInRestrictedFragment(f"higher-order context entry {n}")
    return _Cost().go(env, e)


def nao(e: Term) -> int:
    """Nesting depth of array operations in a Source (or extended) term."""
    if isinstance(e, (Var, Const)):
        return 0
    if isinstance(e, Map2):
        return max(1 + nao(e.body), nao(e.left), nao(e.right))
    if isinstance(e, Map):
        return max(1 + nao(e.body), nao(e.arg))
    if isinstance(e, Fold):
        return max(1 + nao(e.body), nao(e.init), nao(e.arg))
    from .core import children

    return max((nao(c) for c, _ in children(e)), default=0)


@dataclass
class CheapGradientReport:
    cost_e: CostVector
    cost_grad: CostVector
    p: int
    bound: CostVector
    holds: bool
    total_e: int
    total_grad: int
    total_bound: int
    holds_total: bool

    def to_json(self) -> dict:
        g = self.cost_grad
        return {
            "moves": g.moves, "adds": g.adds, "mults": g.mults, "nlops": g.nlops,
            "p": self.p,
            "cost_e": list(self.cost_e.as_tuple()),
            "bound": list(self.bound.as_tuple()),
            "holds": self.holds,
            "total_e": self.total_e,
            "total_grad": self.total_grad,
            "total_bound": self.total_bound,
            "holds_total": self.holds_total,
        }


def check_cheap_gradient(ctx: Context, e: Term, extensions: Iterable[str] = (),
                         rules: str = "pe+algebra") -> CheapGradientReport:
    """Compare cost(opt(grad e)) with 4 * 3^p * cost(e), componentwise and in total.

    ``rules`` defaults to partial evaluation plus the algebraic simplifications,
    which remove the additions of seeded zeros.
    """
    from .optimizer import optimize
    from .reverse import gradient

    g = optimize(gradient(ctx, e, tuple(extensions)), rules)
    ce, cg = cost(e, ctx), cost(g, ctx)
    p = nao(e)
    k = 4 * 3 ** p
    bound = k * ce
    return CheapGradientReport(ce, cg, p, bound, cg <= bound, ce.total(), cg.total(),
                               bound.total(), cg.total() <= bound.total())


__all__ = ["CostVector", "cost", "nao", "check_cheap_gradient", "CheapGradientReport"]
