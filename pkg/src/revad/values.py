"""Runtime values.

Reals are Python floats, booleans are ``bool``, tuples are plain ``tuple``
and arrays are :class:`ArrayV`, a tuple subclass so the two stay distinct.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from .core import (
    REAL, Arr, ArrayLit, Bool, Const, Prod, Real, Term, Tuple, Type,
)


class ArrayV(tuple):
    __slots__ = ()

    def __repr__(self) -> str:
        return "ArrayV(" + repr(list(self)) + ")"


@dataclass(frozen=True)
class Closure:
    params: tuple[str, ...]
    body: Term
    env: Mapping[str, "Value"]


Value = Union[float, bool, tuple, ArrayV, Closure]


def value_to_term(v: Value) -> Term:
    if isinstance(v, bool):
        return Const(v)
    if isinstance(v, float):
        return Const(v)
    if isinstance(v, ArrayV):
        return ArrayLit(tuple(value_to_term(a) for a in v))
    if isinstance(v, tuple):
        return Tuple(tuple(value_to_term(a) for a in v))
    raise TypeError(f"cannot turn {v!r} into a literal term")


def format_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, ArrayV):
        return "[" + ", ".join(format_value(a) for a in v) + "]"
    if isinstance(v, tuple):
        return "<" + ", ".join(format_value(a) for a in v) + ">"
    if isinstance(v, Closure):
        return "<closure>"
    return repr(v)


def value_type(v: Value) -> Type:
    if isinstance(v, bool):
        return Bool()
    if isinstance(v, float):
        return REAL
    if isinstance(v, ArrayV):
        if not v:
            return Arr(0, REAL)
        return Arr(len(v), value_type(v[0]))
    if isinstance(v, tuple):
        return Prod(tuple(value_type(a) for a in v))
    raise TypeError(f"no ground type for {v!r}")


def conforms(v: Value, t: Type) -> bool:
    if isinstance(t, Real):
        return isinstance(v, float) and not isinstance(v, bool)
    if isinstance(t, Bool):
        return isinstance(v, bool)
    if isinstance(t, Arr):
        return isinstance(v, ArrayV) and len(v) == t.size and all(conforms(a, t.elem) for a in v)
    if isinstance(t, Prod):
        return (
            isinstance(v, tuple) and not isinstance(v, ArrayV) and len(v) == len(t.items)
            and all(conforms(a, s) for a, s in zip(v, t.items))
        )
    return False


def flatten(v: Value) -> list[float]:
    """Scalar coordinates of a ground value in a fixed order."""
    if isinstance(v, float):
        return [v]
    out: list[float] = []
    for a in v:  # arrays and tuples alike
        out.extend(flatten(a))
    return out


def unflatten(t: Type, xs: list[float], start: int = 0) -> tuple[Value, int]:
    if isinstance(t, Real):
        return float(xs[start]), start + 1
    if isinstance(t, Arr):
        items = []
        for _ in range(t.size):
            a, start = unflatten(t.elem, xs, start)
            items.append(a)
        return ArrayV(items), start
    if isinstance(t, Prod):
        items = []
        for s in t.items:
            a, start = unflatten(s, xs, start)
            items.append(a)
        return tuple(items), start
    raise TypeError(f"cannot unflatten into {t}")


def scalar_count(t: Type) -> int:
    if isinstance(t, Real):
        return 1
    if isinstance(t, Arr):
        return t.size * scalar_count(t.elem)
    if isinstance(t, Prod):
        return sum(scalar_count(s) for s in t.items)
    raise TypeError(f"not a ground type: {t}")
