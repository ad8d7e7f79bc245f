"""Substitution-based small-step stepper, used as an oracle for the evaluator.

Each call to :func:`step` contracts the leftmost-innermost redex allowed by
the call-by-value evaluation contexts.  Array results of scans are built
with two auxiliary constructors (:class:`Cons`, :class:`Snoc`) that mirror
the ``v :: e`` and ``e :: v`` shapes of the rules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from . import ops
from .core import (
    Apply, ArrayLit, Binary, Const, Foldl, If, Lambda, Let, LetTuple, Map, Map2, Proj,
    Reduce, Scanl, ScanlPair, Scanr, ScanrPair, Shift1L, Shift1R, Term, Tuple, Unary, Var,
    _t, substitute_many,
)
from .errors import DynamicTypeError
from .values import ArrayV, Value, value_to_term


@dataclass(frozen=True, slots=True)
class Cons(Term):
    head: Term
    tail: Term
    SPEC = (_t("head"), _t("tail"))


@dataclass(frozen=True, slots=True)
class Snoc(Term):
    init: Term
    last: Term
    SPEC = (_t("init"), _t("last"))


@dataclass(frozen=True, slots=True)
class SplitLast(Term):
    arg: Term
    SPEC = (_t("arg"),)


@dataclass(frozen=True, slots=True)
class SplitFirst(Term):
    arg: Term
    SPEC = (_t("arg"),)


def is_value(e: Term) -> bool:
    if isinstance(e, (Const, Lambda)):
        return True
    if isinstance(e, (Tuple, ArrayLit)):
        return all(is_value(a) for a in e.items)
    return False


class Stuck(DynamicTypeError):
    pass


def _items(e: Term, where: str) -> tuple[Term, ...]:
    if not isinstance(e, ArrayLit):
        raise Stuck(f"{where}: expected an array literal")
    return e.items


def _num(e: Term, where: str) -> float:
    if not isinstance(e, Const) or isinstance(e.value, bool):
        raise Stuck(f"{where}: expected a real constant")
    return e.value


def step(e: Term) -> Term:
    """One reduction step; raises :class:`Stuck` on values or stuck terms."""
    if is_value(e):
        raise Stuck("already a value")
    if isinstance(e, Var):
        raise Stuck(f"free variable {e.name}")
    if isinstance(e, (Tuple, ArrayLit)):
        items = list(e.items)
        for i, a in enumerate(items):
            if not is_value(a):
                items[i] = step(a)
                return type(e)(tuple(items))
    if isinstance(e, Let):
        if not is_value(e.bound):
            return Let(e.name, step(e.bound), e.body)
        return substitute_many(e.body, {e.name: e.bound})
    if isinstance(e, LetTuple):
        if not is_value(e.bound):
            return LetTuple(e.names, step(e.bound), e.body)
        if not isinstance(e.bound, Tuple) or len(e.bound.items) != len(e.names):
            raise Stuck("destructuring a non-tuple")
        return substitute_many(e.body, dict(zip(e.names, e.bound.items)))
    if isinstance(e, Proj):
        if not is_value(e.arg):
            return Proj(e.index, step(e.arg))
        if not isinstance(e.arg, Tuple):
            raise Stuck("projection of a non-tuple")
        return e.arg.items[e.index - 1]
    if isinstance(e, Unary):
        if not is_value(e.arg):
            return Unary(e.op, step(e.arg))
        a = _num(e.arg, e.op)
        if e.op in ops.PREDICATES:
            return Const(ops.PREDICATES[e.op](a))
        return Const(ops.OP1[e.op].fn(a))
    if isinstance(e, Binary):
        if not is_value(e.left):
            return Binary(e.op, step(e.left), e.right)
        if not is_value(e.right):
            return Binary(e.op, e.left, step(e.right))
        return Const(ops.OP2[e.op].fn(_num(e.left, e.op), _num(e.right, e.op)))
    if isinstance(e, If):
        if not is_value(e.cond):
            return If(step(e.cond), e.then, e.orelse)
        if not isinstance(e.cond, Const) or not isinstance(e.cond.value, bool):
            raise Stuck("if on a non-boolean")
        return e.then if e.cond.value else e.orelse
    if isinstance(e, Map2):
        if not is_value(e.left):
            return Map2(e.x, e.y, e.body, step(e.left), e.right)
        if not is_value(e.right):
            return Map2(e.x, e.y, e.body, e.left, step(e.right))
        xs, ys = _items(e.left, "map2"), _items(e.right, "map2")
        if len(xs) != len(ys):
            raise Stuck("map2 length mismatch")
        return ArrayLit(tuple(substitute_many(e.body, {e.x: a, e.y: b}) for a, b in zip(xs, ys)))
    if isinstance(e, Map):
        if not is_value(e.arg):
            return Map(e.x, e.body, step(e.arg))
        return ArrayLit(tuple(substitute_many(e.body, {e.x: a}) for a in _items(e.arg, "map")))
    if isinstance(e, (Reduce, Foldl, Scanl, Scanr, ScanlPair, ScanrPair)):
        cls = type(e)
        if not is_value(e.init):
            return cls(e.x, e.y, e.body, step(e.init), e.arg)
        if not is_value(e.arg):
            return cls(e.x, e.y, e.body, e.init, step(e.arg))
        xs = _items(e.arg, cls.__name__)
        v = e.init
        if isinstance(e, ScanlPair):
            return SplitLast(Scanl(e.x, e.y, e.body, v, e.arg))
        if isinstance(e, ScanrPair):
            return SplitFirst(Scanr(e.x, e.y, e.body, v, e.arg))
        if isinstance(e, (Reduce, Foldl)):
            if not xs:
                return v
            nxt = substitute_many(e.body, {e.x: v, e.y: xs[0]})
            return cls(e.x, e.y, e.body, nxt, ArrayLit(xs[1:]))
        if isinstance(e, Scanl):
            if not xs:
                return ArrayLit((v,))
            nxt = substitute_many(e.body, {e.x: v, e.y: xs[0]})
            return Cons(v, Scanl(e.x, e.y, e.body, nxt, ArrayLit(xs[1:])))
        if not xs:
            return ArrayLit((v,))
        nxt = substitute_many(e.body, {e.x: v, e.y: xs[-1]})
        return Snoc(Scanr(e.x, e.y, e.body, nxt, ArrayLit(xs[:-1])), v)
    if isinstance(e, (Shift1L, Shift1R)):
        if not is_value(e.arg):
            return type(e)(step(e.arg))
        xs = _items(e.arg, "shift")
        if not xs:
            return e.arg
        return ArrayLit(xs[1:] if isinstance(e, Shift1L) else xs[:-1])
    if isinstance(e, Apply):
        if not is_value(e.fn):
            return Apply(step(e.fn), e.args)
        args = list(e.args)
        for i, a in enumerate(args):
            if not is_value(a):
                args[i] = step(a)
                return Apply(e.fn, tuple(args))
        if not isinstance(e.fn, Lambda) or len(e.fn.params) != len(args):
            raise Stuck("bad application")
        return substitute_many(e.fn.body, dict(zip(e.fn.params, args)))
    if isinstance(e, Cons):
        if not is_value(e.head):
            return Cons(step(e.head), e.tail)
        if not is_value(e.tail):
            return Cons(e.head, step(e.tail))
        return ArrayLit((e.head,) + _items(e.tail, "cons"))
    if isinstance(e, Snoc):
        if not is_value(e.init):
            return Snoc(step(e.init), e.last)
        if not is_value(e.last):
            return Snoc(e.init, step(e.last))
        return ArrayLit(_items(e.init, "snoc") + (e.last,))
    if isinstance(e, (SplitLast, SplitFirst)):
        if not is_value(e.arg):
            return type(e)(step(e.arg))
        xs = _items(e.arg, "split")
        if isinstance(e, SplitLast):
            return Tuple((ArrayLit(xs[:-1]), xs[-1]))
        return Tuple((xs[0], ArrayLit(xs[1:])))
    raise Stuck(f"no rule for {type(e).__name__}")


def term_to_value(e: Term) -> Value:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, ArrayLit):
        return ArrayV(term_to_value(a) for a in e.items)
    if isinstance(e, Tuple):
        return tuple(term_to_value(a) for a in e.items)
    raise Stuck("not a first-order value")


def run(env: Mapping[str, Value], e: Term, max_steps: int = 1_000_000) -> Value:
    """Close ``e`` over ``env`` and step until a value is reached."""
    t = substitute_many(e, {k: value_to_term(v) for k, v in env.items()})
    for _ in range(max_steps):
        if is_value(t):
            return term_to_value(t)
        t = step(t)
    raise Stuck(f"no value after {max_steps} steps")
