"""Big-step call-by-value interpreter for Target (and hence Source)."""

from __future__ import annotations

import random
from typing import Mapping, Sequence

from . import ops
from .core import (
    Apply, ArrayLit, Binary, Const, Context, Foldl, If, Lambda, Let, LetTuple, Map, Map2,
    Proj, Reduce, Scanl, ScanlPair, Scanr, ScanrPair, Shift1L, Shift1R, Term, Tuple, Unary,
    Var, free_vars,
)
from .errors import ArityMismatch, DynamicTypeError
from .values import ArrayV, Closure, Value, conforms

Env = Mapping[str, Value]


def _real(v: Value, where: str) -> float:
    if not isinstance(v, float):
        raise DynamicTypeError(f"{where}: expected a real, got {v!r}")
    return v


def _array(v: Value, where: str) -> ArrayV:
    if not isinstance(v, ArrayV):
        raise DynamicTypeError(f"{where}: expected an array, got {v!r}")
    return v


def _bind(env: Env, name: str, v: Value) -> dict[str, Value]:
    new = dict(env)
    new[name] = v
    return new


def scan_left(f, init: Value, xs: Sequence[Value]) -> list[Value]:
    acc = [init]
    for a in xs:
        acc.append(f(acc[-1], a))
    return acc


def scan_right(f, init: Value, xs: Sequence[Value]) -> list[Value]:
    """Right-to-left scan; the accumulator is the first argument of ``f``."""
    acc = [init]
    for a in reversed(xs):
        acc.append(f(acc[-1], a))
    acc.reverse()
    return acc


class Evaluator:
    def __init__(self, check_assoc: bool = False, seed: int = 0) -> None:
        self.check_assoc = check_assoc
        self.rng = random.Random(seed)

    def eval(self, env: Env, e: Term) -> Value:
        if isinstance(e, Var):
            try:
                return env[e.name]
            except KeyError:
                raise DynamicTypeError(f"unbound variable {e.name!r}") from None
        if isinstance(e, Const):
            return e.value
        if isinstance(e, Let):
            return self.eval(_bind(env, e.name, self.eval(env, e.bound)), e.body)
        if isinstance(e, LetTuple):
            v = self.eval(env, e.bound)
            if not isinstance(v, tuple) or isinstance(v, ArrayV) or len(v) != len(e.names):
                raise DynamicTypeError(f"cannot destructure {v!r}")
            inner = dict(env)
            inner.update(zip(e.names, v))
            return self.eval(inner, e.body)
        if isinstance(e, Tuple):
            return tuple(self.eval(env, a) for a in e.items)
        if isinstance(e, Proj):
            v = self.eval(env, e.arg)
            if not isinstance(v, tuple) or isinstance(v, ArrayV):
                raise DynamicTypeError(f"projection of non-tuple {v!r}")
            return v[e.index - 1]
        if isinstance(e, Unary):
            a = _real(self.eval(env, e.arg), e.op)
            if e.op in ops.PREDICATES:
                return ops.PREDICATES[e.op](a)
            return ops.OP1[e.op].fn(a)
        if isinstance(e, Binary):
            a = _real(self.eval(env, e.left), e.op)
            b = _real(self.eval(env, e.right), e.op)
            return ops.OP2[e.op].fn(a, b)
        if isinstance(e, If):
            c = self.eval(env, e.cond)
            if not isinstance(c, bool):
                raise DynamicTypeError(f"if on non-boolean {c!r}")
            return self.eval(env, e.then if c else e.orelse)
        if isinstance(e, Map2):
            xs = _array(self.eval(env, e.left), "map2")
            ys = _array(self.eval(env, e.right), "map2")
            if len(xs) != len(ys):
                raise DynamicTypeError("map2 on arrays of different lengths")
            f = self.fn2(env, e.x, e.y, e.body)
            return ArrayV(f(a, b) for a, b in zip(xs, ys))
        if isinstance(e, Map):
            xs = _array(self.eval(env, e.arg), "map")
            return ArrayV(self.eval(_bind(env, e.x, a), e.body) for a in xs)
        if isinstance(e, (Reduce, Foldl, Scanl, Scanr, ScanlPair, ScanrPair)):
            init = self.eval(env, e.init)
            xs = _array(self.eval(env, e.arg), type(e).__name__)
            f = self.fn2(env, e.x, e.y, e.body)
            if isinstance(e, (Reduce, Foldl)):
                if isinstance(e, Reduce) and self.check_assoc:
                    self.sample_associativity(f, init, xs)
                acc = init
                for a in xs:
                    acc = f(acc, a)
                return acc
            if isinstance(e, Scanl):
                return ArrayV(scan_left(f, init, xs))
            if isinstance(e, Scanr):
                return ArrayV(scan_right(f, init, xs))
            if isinstance(e, ScanlPair):
                s = scan_left(f, init, xs)
                return (ArrayV(s[:-1]), s[-1])
            s = scan_right(f, init, xs)
            return (s[0], ArrayV(s[1:]))
        if isinstance(e, Shift1L):
            xs = _array(self.eval(env, e.arg), "shift1L")
            return ArrayV(xs[1:])
        if isinstance(e, Shift1R):
            xs = _array(self.eval(env, e.arg), "shift1R")
            return ArrayV(xs[:-1])
        if isinstance(e, Lambda):
            captured = {n: env[n] for n in free_vars(e) if n in env}
            return Closure(e.params, e.body, captured)
        if isinstance(e, Apply):
            f = self.eval(env, e.fn)
            args = [self.eval(env, a) for a in e.args]
            if not isinstance(f, Closure):
                raise DynamicTypeError(f"application of non-function {f!r}")
            if len(args) != len(f.params):
                raise ArityMismatch(f"closure expects {len(f.params)} arguments, got {len(args)}")
            inner = dict(f.env)
            inner.update(zip(f.params, args))
            return self.eval(inner, f.body)
        if isinstance(e, ArrayLit):
            return ArrayV(self.eval(env, a) for a in e.items)
        raise DynamicTypeError(f"cannot evaluate {type(e).__name__}")

    def fn2(self, env: Env, x: str, y: str, body: Term):
        def f(a: Value, b: Value) -> Value:
            inner = dict(env)
            inner[x] = a
            inner[y] = b
            return self.eval(inner, body)

        return f

    def sample_associativity(self, f, unit: Value, xs: Sequence[Value]) -> None:
        if len(xs) < 3:
            return
        for _ in range(3):
            a, b, c = (xs[self.rng.randrange(len(xs))] for _ in range(3))
            lhs, rhs = f(f(a, b), c), f(a, f(b, c))
            if isinstance(lhs, float) and abs(lhs - rhs) > 1e-9 * max(1.0, abs(lhs)):
                raise DynamicTypeError("reduce body is not associative on sampled values")


def eval_term(env: Env, e: Term) -> Value:
    return Evaluator().eval(env, e)


def eval_gradient_entry(ctx: Context, grad_term: Term, point: Sequence[Value]) -> tuple:
    """Bind ``ctx`` to ``point``, evaluate and return the tuple of partials."""
    if len(point) != len(ctx):
        raise ArityMismatch(f"context has {len(ctx)} entries, point has {len(point)}")
    for (name, t), v in zip(ctx, point):
        if not conforms(v, t):
            raise ArityMismatch(f"value for {name} does not match {t}")
    out = eval_term(dict(zip(ctx.names, point)), grad_term)
    if not isinstance(out, tuple) or isinstance(out, ArrayV) or len(out) != len(ctx):
        raise ArityMismatch("gradient term did not produce one component per context entry")
    return out
