"""Concrete syntax: tokenizer, parser and printer.

Programs look like::

    ctx x1:real, A:real^4;
    let w = x1 * x1 in reduce (x y. x * y) w A

The parser also reads the Target extensions (lambdas, application,
destructuring lets, scans) so that golden files can be written in the same
notation the printer produces.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from . import ops
from .core import (
    BOOL, FOLD_CLASSES, REAL, Apply, Arr, ArrayLit, Binary, Const, Context, Fold, If, Lambda,
    Let, LetTuple, Map, Map2, Prod, Proj, Shift1L, Shift1R, Term, Tuple, Type, Unary, Var,
)
from .errors import SyntaxError_
from .values import ArrayV, Value

KEYWORDS = {
    "ctx", "let", "in", "if", "then", "else", "fun", "fst", "snd", "map2", "map",
    "shift1L", "shift1R", "true", "false", "real", "bool", *FOLD_CLASSES,
}
PREFIX_OPS = set(ops.OP1) | set(ops.PREDICATES)
OP_SYMBOLS = {"+", "-", "*", "/"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+|\#[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>->|[()<>\[\],;:=+\-*/.^])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Tok:
    kind: str  # num, id, kw, sym, eof
    text: str
    line: int
    col: int
    spaced: bool  # preceded by whitespace


def tokenize(text: str) -> list[Tok]:
    out: list[Tok] = []
    pos, line, col = 0, 1, 1
    spaced = True
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SyntaxError_(line, col, "a token", text[pos])
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line, col, spaced = line + 1, 1, True
        elif kind == "ws":
            col += len(s)
            spaced = True
        else:
            if kind == "id" and s in KEYWORDS:
                kind = "kw"
            out.append(Tok(kind, s, line, col, spaced))
            col += len(s)
            spaced = False
        pos = m.end()
    out.append(Tok("eof", "", line, col, True))
    return out


_PI = re.compile(r"pi([1-9][0-9]*)$")


class Parser:
    def __init__(self, text: str, target: bool = True) -> None:
        self.toks = tokenize(text)
        self.i = 0
        self.target = target
        self.shorthand = 0

    # -- helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "kw") and t.text in texts

    def advance(self) -> Tok:
        t = self.tok
        self.i += 1
        return t

    def fail(self, expected: str) -> SyntaxError_:
        t = self.tok
        return SyntaxError_(t.line, t.col, expected, t.text or "end of input")

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            raise self.fail(repr(text))
        return self.advance()

    def ident(self) -> str:
        if self.tok.kind != "id":
            raise self.fail("an identifier")
        return self.advance().text

    # -- types
    def parse_type(self) -> Type:
        items = [self.parse_base_type()]
        while self.at("*"):
            self.advance()
            items.append(self.parse_base_type())
        return items[0] if len(items) == 1 else Prod(tuple(items))

    def parse_base_type(self) -> Type:
        if self.at("real"):
            self.advance()
            t: Type = REAL
        elif self.at("bool"):
            self.advance()
            t = BOOL
        elif self.at("("):
            self.advance()
            t = self.parse_type()
            self.expect(")")
        else:
            raise self.fail("a type")
        while self.at("^"):
            self.advance()
            if self.tok.kind != "num" or not self.tok.text.isdigit():
                raise self.fail("an array size")
            t = Arr(int(self.advance().text), t)
        return t

    # -- programs
    def parse_program(self) -> tuple[Context, Term]:
        self.expect("ctx")
        entries: list[tuple[str, Type]] = []
        if not self.at(";"):
            while True:
                name = self.ident()
                self.expect(":")
                entries.append((name, self.parse_type()))
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(";")
        if self.tok.kind == "eof":
            raise self.fail("an expression")
        try:
            ctx = Context(tuple(entries))
        except ValueError as exc:
            raise SyntaxError_(1, 1, "distinct context names", str(exc)) from None
        body = self.parse_expr()
        self.end()
        return ctx, body

    def end(self) -> None:
        if self.tok.kind != "eof":
            raise self.fail("end of input")

    # -- expressions
    def parse_expr(self) -> Term:
        if self.at("let"):
            self.advance()
            names = [self.ident()]
            while self.at(","):
                self.advance()
                names.append(self.ident())
            self.expect("=")
            bound = self.parse_expr()
            self.expect("in")
            body = self.parse_expr()
            if len(names) == 1:
                return Let(names[0], bound, body)
            self.require_target("destructuring let")
            return LetTuple(tuple(names), bound, body)
        if self.at("if"):
            self.advance()
            c = self.parse_expr()
            self.expect("then")
            a = self.parse_expr()
            self.expect("else")
            b = self.parse_expr()
            return If(c, a, b)
        if self.at("fun"):
            self.require_target("fun")
            self.advance()
            self.expect("(")
            params: list[str] = []
            types: list[Optional[Type]] = []
            while not self.at(")"):
                params.append(self.ident())
                if self.at(":"):
                    self.advance()
                    types.append(self.parse_type())
                else:
                    types.append(None)
                if not self.at(")"):
                    self.expect(",")
            self.advance()
            self.expect("->")
            return Lambda(tuple(params), self.parse_expr(), tuple(types))
        return self.parse_additive()

    def require_target(self, what: str) -> None:
        if not self.target:
            raise self.fail(f"Source syntax ({what} is Target-only)")

    def parse_additive(self) -> Term:
        left = self.parse_multiplicative()
        while self.at("+", "-"):
            op = self.advance().text
            left = Binary(op, left, self.parse_multiplicative())
        return left

    def parse_multiplicative(self) -> Term:
        left = self.parse_prefix()
        while self.at("*", "/"):
            op = self.advance().text
            left = Binary(op, left, self.parse_prefix())
        return left

    def parse_prefix(self) -> Term:
        t = self.tok
        if self.at("-"):
            self.advance()
            if self.tok.kind == "num" and not self.tok.spaced:
                return self.parse_postfix_from(Const(-float(self.advance().text)))
            return Unary("neg", self.parse_prefix())
        if t.kind == "id" and t.text in PREFIX_OPS:
            self.advance()
            return Unary(t.text, self.parse_prefix())
        if t.kind == "id" and _PI.match(t.text):
            self.require_target("n-ary projection")
            self.advance()
            return Proj(int(_PI.match(t.text).group(1)), self.parse_prefix())
        if self.at("fst", "snd"):
            self.advance()
            return Proj(1 if t.text == "fst" else 2, self.parse_prefix())
        if self.at("shift1L", "shift1R"):
            self.require_target(t.text)
            self.advance()
            cls = Shift1L if t.text == "shift1L" else Shift1R
            return cls(self.parse_prefix())
        if self.at("map2"):
            self.advance()
            x, y, body = self.parse_lam2()
            a = self.parse_postfix()
            b = self.parse_postfix()
            return Map2(x, y, body, a, b)
        if self.at("map"):
            self.advance()
            x, body = self.parse_lam1()
            return Map(x, body, self.parse_postfix())
        if t.kind == "kw" and t.text in FOLD_CLASSES:
            if t.text not in ("reduce", "foldl"):
                self.require_target(t.text)
            self.advance()
            x, y, body = self.parse_lam2()
            init = self.parse_postfix()
            arr = self.parse_postfix()
            return FOLD_CLASSES[t.text](x, y, body, init, arr)
        return self.parse_postfix()

    def parse_lam2(self) -> tuple[str, str, Term]:
        if self.tok.kind == "sym" and self.tok.text in OP_SYMBOLS:
            op = self.advance().text
            self.shorthand += 1
            x, y = f"u{self.shorthand}'", f"v{self.shorthand}'"
            return x, y, Binary(op, Var(x), Var(y))
        self.expect("(")
        x = self.ident()
        if self.at(","):
            self.advance()
        y = self.ident()
        self.expect(".")
        body = self.parse_expr()
        self.expect(")")
        return x, y, body

    def parse_lam1(self) -> tuple[str, Term]:
        self.expect("(")
        x = self.ident()
        self.expect(".")
        body = self.parse_expr()
        self.expect(")")
        return x, body

    def parse_postfix(self) -> Term:
        return self.parse_postfix_from(self.parse_atom())

    def parse_postfix_from(self, e: Term) -> Term:
        while self.at("(") and not self.tok.spaced:
            self.require_target("application")
            self.advance()
            args: list[Term] = []
            while not self.at(")"):
                args.append(self.parse_expr())
                if not self.at(")"):
                    self.expect(",")
            self.advance()
            e = Apply(e, tuple(args))
        return e

    def parse_atom(self) -> Term:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(float(t.text))
        if t.kind == "id":
            if t.text in PREFIX_OPS:
                raise self.fail("an operand")
            self.advance()
            return Var(t.text)
        if self.at("true", "false"):
            self.advance()
            return Const(t.text == "true")
        if self.at("("):
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            return e
        if self.at("<"):
            self.advance()
            items: list[Term] = []
            while not self.at(">"):
                items.append(self.parse_expr())
                if not self.at(">"):
                    self.expect(",")
            self.advance()
            if len(items) != 2:
                self.require_target("tuples other than pairs")
            return Tuple(tuple(items))
        if self.at("["):
            self.require_target("array literal")
            self.advance()
            items = []
            while not self.at("]"):
                items.append(self.parse_expr())
                if not self.at("]"):
                    self.expect(",")
            self.advance()
            return ArrayLit(tuple(items))
        raise self.fail("an expression")


def parse_program(text: str) -> tuple[Context, Term]:
    return Parser(text, target=False).parse_program()


def parse_target_program(text: str) -> tuple[Context, Term]:
    return Parser(text, target=True).parse_program()


def parse_term(text: str, target: bool = True) -> Term:
    p = Parser(text, target)
    e = p.parse_expr()
    p.end()
    return e


def parse_type(text: str) -> Type:
    p = Parser(text)
    t = p.parse_type()
    p.end()
    return t


# ---------------------------------------------------------------- value files


def _literal(p: Parser) -> Value:
    t = p.tok
    if p.at("-"):
        p.advance()
        v = _literal(p)
        if not isinstance(v, float):
            raise p.fail("a number after '-'")
        return -v
    if t.kind == "num":
        p.advance()
        return float(t.text)
    if p.at("true", "false"):
        p.advance()
        return t.text == "true"
    if p.at("["):
        p.advance()
        items = []
        while not p.at("]"):
            items.append(_literal(p))
            if not p.at("]"):
                p.expect(",")
        p.advance()
        return ArrayV(items)
    if p.at("<"):
        p.advance()
        items = []
        while not p.at(">"):
            items.append(_literal(p))
            if not p.at(">"):
                p.expect(",")
        p.advance()
        return tuple(items)
    raise p.fail("a literal value")


def parse_values(text: str) -> dict[str, Value]:
    """Parse a ``.vals`` file: one ``name = literal`` per line."""
    out: dict[str, Value] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        p = Parser(line)
        p.toks = [Tok(k.kind, k.text, lineno, k.col, k.spaced) for k in p.toks]
        name = p.ident()
        p.expect("=")
        out[name] = _literal(p)
        p.end()
    return out


# ---------------------------------------------------------------- printing

LET, ADD, MUL, PREFIX, POSTFIX, ATOM = range(6)


def format_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e15 and not (v == 0 and str(v).startswith("-")):
        return str(int(v))
    return repr(v)


class Printer:
    def show(self, e: Term, need: int = LET) -> str:
        s, level = self.render(e)
        return f"({s})" if level < need else s

    def lam2(self, x: str, y: str, body: Term) -> str:
        if (isinstance(body, Binary) and body.left == Var(x) and body.right == Var(y)
                and x != y):
            return body.op
        return f"({x} {y}. {self.show(body)})"

    def render(self, e: Term) -> tuple[str, int]:
        if isinstance(e, Var):
            return e.name, ATOM
        if isinstance(e, Const):
            if isinstance(e.value, bool):
                return ("true" if e.value else "false"), ATOM
            s = format_number(e.value)
            return s, (PREFIX if s.startswith("-") else ATOM)
        if isinstance(e, Let):
            return f"let {e.name} = {self.show(e.bound)} in {self.show(e.body)}", LET
        if isinstance(e, LetTuple):
            names = ", ".join(e.names)
            return f"let {names} = {self.show(e.bound)} in {self.show(e.body)}", LET
        if isinstance(e, If):
            return (f"if {self.show(e.cond)} then {self.show(e.then)} "
                    f"else {self.show(e.orelse)}"), LET
        if isinstance(e, Lambda):
            return f"fun ({', '.join(e.params)}) -> {self.show(e.body)}", LET
        if isinstance(e, Binary):
            level = ADD if e.op in ("+", "-") else MUL
            return (f"{self.show(e.left, level)} {e.op} {self.show(e.right, level + 1)}"), level
        if isinstance(e, Unary):
            return f"{e.op} {self.show(e.arg, POSTFIX)}", PREFIX
        if isinstance(e, Proj):
            kw = {1: "fst", 2: "snd"}.get(e.index, f"pi{e.index}")
            return f"{kw} {self.show(e.arg, POSTFIX)}", PREFIX
        if isinstance(e, (Shift1L, Shift1R)):
            kw = "shift1L" if isinstance(e, Shift1L) else "shift1R"
            return f"{kw} {self.show(e.arg, POSTFIX)}", PREFIX
        if isinstance(e, Map2):
            return (f"map2 {self.lam2(e.x, e.y, e.body)} {self.show(e.left, POSTFIX)} "
                    f"{self.show(e.right, POSTFIX)}"), PREFIX
        if isinstance(e, Map):
            return f"map ({e.x}. {self.show(e.body)}) {self.show(e.arg, POSTFIX)}", PREFIX
        if isinstance(e, Fold):
            return (f"{e.KEYWORD} {self.lam2(e.x, e.y, e.body)} {self.show(e.init, POSTFIX)} "
                    f"{self.show(e.arg, POSTFIX)}"), PREFIX
        if isinstance(e, Apply):
            args = ", ".join(self.show(a) for a in e.args)
            return f"{self.show(e.fn, POSTFIX)}({args})", POSTFIX
        if isinstance(e, Tuple):
            return "<" + ", ".join(self.show(a) for a in e.items) + ">", ATOM
        if isinstance(e, ArrayLit):
            return "[" + ", ".join(self.show(a) for a in e.items) + "]", ATOM
        raise TypeError(f"cannot print {e!r}")


def print_term(e: object) -> str:
    if isinstance(e, Term):
        return Printer().show(e)
    if isinstance(e, Type):
        return print_type(e)
    from .unf import UnfTerm, print_unf

    if isinstance(e, UnfTerm):
        return print_unf(e)
    raise TypeError(f"cannot print {e!r}")


def print_type(t: Type) -> str:
    from .core import Arr as _Arr, Prod as _Prod, Real as _Real

    if isinstance(t, _Arr) and isinstance(t.elem, _Real):
        return f"real^{t.size}"
    if isinstance(t, _Arr):
        return f"({print_type(t.elem)})^{t.size}"
    if isinstance(t, _Prod):
        return " * ".join(
            f"({print_type(a)})" if isinstance(a, _Prod) else print_type(a) for a in t.items
        )
    return str(t)


def print_program(ctx: Context, e: Term) -> str:
    header = ", ".join(f"{n}:{print_type(t)}" for n, t in ctx)
    return f"ctx {header}; {print_term(e)}"


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


_EXT_PRAGMA = re.compile(r"^\s*#\s*ext:\s*([A-Za-z0-9_,\- ]*)$", re.MULTILINE)


def pragma_extensions(text: str) -> tuple[str, ...]:
    """Extensions requested by ``# ext: a, b`` comment lines in a program file."""
    out: list[str] = []
    for m in _EXT_PRAGMA.finditer(text):
        out.extend(s.strip() for s in m.group(1).split(",") if s.strip())
    return tuple(dict.fromkeys(out))
