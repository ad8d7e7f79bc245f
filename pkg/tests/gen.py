"""Seeded generator of well-typed Source terms for property tests."""

from __future__ import annotations

import random

from revad.core import (
    REAL, Arr, Binary, Const, Context, Let, Map2, Proj, Reduce, Term, Tuple, Unary, Var,
)

N = 3
CTX = Context.of(("x", REAL), ("y", REAL), ("A", Arr(N)), ("B", Arr(N)))
CONSTS = (0.5, 1.0, 2.0, 1.25, 3.0)
LET_NAMES = ("u", "v", "w", "x")  # reusing x exercises shadowing


class TermGen:
    def __init__(self, seed: int, max_depth: int = 4) -> None:
        self.rng = random.Random(seed)
        self.max_depth = max_depth
        self.counter = 0

    def fresh(self, base: str) -> str:
        self.counter += 1
        return f"{base}{self.counter}"

    def real(self, reals: tuple[str, ...], arrays: tuple[str, ...], depth: int) -> Term:
        r = self.rng
        if depth <= 0 or r.random() < 0.2:
            if reals and r.random() < 0.75:
                return Var(r.choice(reals))
            return Const(r.choice(CONSTS))
        kind = r.choice(["unary", "binary", "binary", "let", "pair", "array" if arrays else "binary"])
        d = depth - 1
        if kind == "unary":
            op = r.choice(["sin", "cos"])
            return Unary(op, self.real(reals, arrays, d))
        if kind == "binary":
            op = r.choice(["+", "-", "*"])
            return Binary(op, self.real(reals, arrays, d), self.real(reals, arrays, d))
        if kind == "let":
            name = r.choice(LET_NAMES)
            bound = self.real(reals, arrays, d)
            return Let(name, bound, self.real(tuple(dict.fromkeys(reals + (name,))), arrays, d))
        if kind == "pair":
            a, b = self.real(reals, arrays, d), self.real(reals, arrays, d)
            return Proj(r.choice([1, 2]), Tuple((a, b)))
        return self.reduce(reals, arrays, d)

    def array(self, reals: tuple[str, ...], arrays: tuple[str, ...], depth: int) -> Term:
        r = self.rng
        if depth <= 0 or r.random() < 0.5:
            return Var(r.choice(arrays))
        a, b = self.fresh("a"), self.fresh("b")
        inner = tuple(n for n in reals if n not in (a, b)) + (a, b)
        body = self.real(inner, (), min(depth - 1, 2))
        return Map2(a, b, body, self.array(reals, arrays, depth - 1), self.array(reals, arrays, depth - 1))

    def reduce(self, reals: tuple[str, ...], arrays: tuple[str, ...], depth: int) -> Term:
        p, q = self.fresh("p"), self.fresh("q")
        op, unit = self.rng.choice([("+", 0.0), ("*", 1.0)])
        return Reduce(p, q, Binary(op, Var(p), Var(q)), Const(unit), self.array(reals, arrays, depth))

    def term(self) -> Term:
        return self.real(("x", "y"), ("A", "B"), self.max_depth)


def random_term(seed: int, max_depth: int = 4) -> Term:
    return TermGen(seed, max_depth).term()


def random_point(seed: int) -> list:
    from revad.values import ArrayV

    r = random.Random(seed)
    return [r.uniform(-1.5, 1.5), r.uniform(-1.5, 1.5),
            ArrayV(r.uniform(-1.5, 1.5) for _ in range(N)),
            ArrayV(r.uniform(-1.5, 1.5) for _ in range(N))]
