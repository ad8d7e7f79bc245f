"""Registry of scalar primitives: evaluators, partial derivatives and costs.

Partial derivatives are given as functions building Target terms, so the
registry is closed under differentiation (``d sin = cos`` and so on).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .core import Binary, Const, Term, Unary

CostTuple = tuple[int, int, int, int]


@dataclass(frozen=True)
class Op1:
    name: str
    fn: Callable[[float], float]
    deriv: Callable[[Term], Term]
    cost: CostTuple = (2, 0, 0, 1)


@dataclass(frozen=True)
class Op2:
    name: str
    fn: Callable[[float, float], float]
    d1: Callable[[Term, Term], Term]
    d2: Callable[[Term, Term], Term]
    cost: CostTuple
    unit: Optional[float] = None
    associative: bool = False


def _div(a: float, b: float) -> float:
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0 or a != a:
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def _log(a: float) -> float:
    if a > 0:
        return math.log(a)
    if a == 0:
        return -math.inf
    return math.nan


def _exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _total(fn: Callable[[float], float]) -> Callable[[float], float]:
    def wrapped(a: float) -> float:
        try:
            return fn(a)
        except ValueError:
            return math.nan

    return wrapped


def _sqrt(a: float) -> float:
    return math.sqrt(a) if a >= 0 else math.nan


ONE = Const(1.0)

OP1: dict[str, Op1] = {
    "sin": Op1("sin", _total(math.sin), lambda x: Unary("cos", x)),
    "cos": Op1("cos", _total(math.cos), lambda x: Unary("neg", Unary("sin", x))),
    "exp": Op1("exp", _exp, lambda x: Unary("exp", x)),
    "log": Op1("log", _log, lambda x: Binary("/", ONE, x)),
    "sqrt": Op1("sqrt", _sqrt, lambda x: Binary("/", Const(0.5), Unary("sqrt", x))),
    "neg": Op1("neg", lambda a: -a, lambda x: Const(-1.0)),
}

OP2: dict[str, Op2] = {
    "+": Op2("+", lambda a, b: a + b, lambda x, y: ONE, lambda x, y: ONE,
             (3, 1, 0, 0), unit=0.0, associative=True),
    "-": Op2("-", lambda a, b: a - b, lambda x, y: ONE, lambda x, y: Const(-1.0),
             (3, 1, 0, 0)),
    "*": Op2("*", lambda a, b: a * b, lambda x, y: y, lambda x, y: x,
             (3, 0, 1, 0), unit=1.0, associative=True),
    "/": Op2("/", _div, lambda x, y: Binary("/", ONE, y),
             lambda x, y: Unary("neg", Binary("/", x, Binary("*", y, y))),
             (3, 0, 1, 0)),
}

# Non-smooth predicate, only available with the conditional extension enabled.
PREDICATES: dict[str, Callable[[float], bool]] = {"gt0": lambda a: a > 0}
PREDICATE_COST: CostTuple = (2, 0, 0, 1)


def op1(name: str) -> Op1:
    return OP1[name]


def op2(name: str) -> Op2:
    return OP2[name]
