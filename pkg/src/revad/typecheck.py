"""Type checkers for Source and Target."""

from __future__ import annotations

from typing import Callable, Iterable, Optional

from . import ops
from .core import (
    BOOL, REAL, Apply, Arr, ArrayLit, Binary, Const, Context, Fold, Foldl, Fun, If,
    Lambda, Let, LetTuple, Map, Map2, Prod, Proj, Reduce, Scanl, ScanlPair, Scanr,
    ScanrPair, Shift1L, Shift1R, Term, Tuple, Type, Unary, Var, free_vars, is_ground,
)
from .errors import (
    ArityMismatch, ArraySizeMismatch, IllegalFreeVariableInReduce, TypeMismatch,
    UnboundVariable, UnsupportedConstruct,
)

EXTENSIONS = frozenset({"reduce-open", "cond", "foldl"})

BindHook = Optional[Callable[[str, Type], None]]


def _expect(expected: Type, found: Type, where: str) -> None:
    if expected != found:
        raise TypeMismatch(expected, found, where)


def _array(t: Type, where: str) -> Arr:
    if not isinstance(t, Arr):
        raise TypeMismatch("array", t, where)
    return t


class _Checker:
    def __init__(self, target: bool, extensions: Iterable[str], on_bind: BindHook) -> None:
        self.target = target
        self.ext = frozenset(extensions)
        self.on_bind = on_bind

    def bind(self, env: dict[str, Type], name: str, t: Type) -> dict[str, Type]:
        if self.on_bind is not None:
            self.on_bind(name, t)
        new = dict(env)
        new[name] = t
        return new

    def need_target(self, e: Term, ext: str | None = None) -> None:
        if self.target or (ext is not None and ext in self.ext):
            return
        raise UnsupportedConstruct(f"{type(e).__name__} is not part of Source")

    def check(self, env: dict[str, Type], e: Term) -> Type:
        if isinstance(e, Var):
            if e.name not in env:
                raise UnboundVariable(e.name)
            return env[e.name]
        if isinstance(e, Const):
            if isinstance(e.value, bool):
                self.need_target(e, "cond")
                return BOOL
            return REAL
        if isinstance(e, Let):
            t1 = self.check(env, e.bound)
            return self.check(self.bind(env, e.name, t1), e.body)
        if isinstance(e, LetTuple):
            self.need_target(e)
            t1 = self.check(env, e.bound)
            if not isinstance(t1, Prod) or len(t1.items) != len(e.names):
                raise TypeMismatch(f"{len(e.names)}-tuple", t1, "let pattern")
            inner = env
            for n, t in zip(e.names, t1.items):
                inner = self.bind(inner, n, t)
            return self.check(inner, e.body)
        if isinstance(e, Tuple):
            if not self.target and len(e.items) != 2:
                raise UnsupportedConstruct("Source products are binary")
            return Prod(tuple(self.check(env, a) for a in e.items))
        if isinstance(e, Proj):
            t = self.check(env, e.arg)
            if not isinstance(t, Prod):
                raise TypeMismatch("product", t, "projection")
            if not self.target and (len(t.items) != 2 or e.index not in (1, 2)):
                raise UnsupportedConstruct("Source projections are fst/snd on pairs")
            if not 1 <= e.index <= len(t.items):
                raise TypeMismatch(f"product with >= {e.index} components", t, "projection")
            return t.items[e.index - 1]
        if isinstance(e, Unary):
            t = self.check(env, e.arg)
            _expect(REAL, t, f"argument of {e.op}")
            if e.op in ops.PREDICATES:
                if not (self.target or "cond" in self.ext):
                    raise UnsupportedConstruct(f"predicate {e.op} requires the cond extension")
                return BOOL
            if e.op not in ops.OP1:
                raise UnsupportedConstruct(f"unknown unary operator {e.op}")
            return REAL
        if isinstance(e, Binary):
            if e.op not in ops.OP2:
                raise UnsupportedConstruct(f"unknown binary operator {e.op}")
            _expect(REAL, self.check(env, e.left), f"left operand of {e.op}")
            _expect(REAL, self.check(env, e.right), f"right operand of {e.op}")
            return REAL
        if isinstance(e, If):
            self.need_target(e, "cond")
            _expect(BOOL, self.check(env, e.cond), "if condition")
            t1 = self.check(env, e.then)
            t2 = self.check(env, e.orelse)
            _expect(t1, t2, "else branch")
            return t1
        if isinstance(e, Map2):
            a = _array(self.check(env, e.left), "map2")
            b = _array(self.check(env, e.right), "map2")
            if a.size != b.size:
                raise ArraySizeMismatch(a.size, b.size)
            inner = self.bind(self.bind(env, e.x, a.elem), e.y, b.elem)
            tb = self.check(inner, e.body)
            if not self.target:
                _expect(REAL, a.elem, "map2 argument element")
                _expect(REAL, b.elem, "map2 argument element")
                _expect(REAL, tb, "map2 body")
            return Arr(a.size, tb)
        if isinstance(e, Map):
            self.need_target(e, "foldl")
            a = _array(self.check(env, e.arg), "map")
            tb = self.check(self.bind(env, e.x, a.elem), e.body)
            if not self.target:
                _expect(REAL, tb, "map body")
            return Arr(a.size, tb)
        if isinstance(e, Fold):
            return self.check_fold(env, e)
        if isinstance(e, (Shift1L, Shift1R)):
            self.need_target(e)
            a = _array(self.check(env, e.arg), "shift")
            return Arr(max(a.size - 1, 0), a.elem)
        if isinstance(e, Lambda):
            self.need_target(e)
            if any(t is None for t in e.types):
                raise TypeMismatch("annotated lambda parameters", "unannotated", "fun")
            inner = env
            for n, t in zip(e.params, e.types):
                if not is_ground(t):
                    raise TypeMismatch("ground parameter type", t, "fun")
                inner = self.bind(inner, n, t)
            return Fun(tuple(e.types), self.check(inner, e.body))
        if isinstance(e, Apply):
            self.need_target(e)
            f = self.check(env, e.fn)
            if not isinstance(f, Fun):
                raise TypeMismatch("function", f, "application")
            if len(f.dom) != len(e.args):
                raise ArityMismatch(f"function expects {len(f.dom)} arguments, got {len(e.args)}")
            for i, (t, a) in enumerate(zip(f.dom, e.args)):
                _expect(t, self.check(env, a), f"argument {i + 1}")
            return f.cod
        if isinstance(e, ArrayLit):
            self.need_target(e)
            ts = [self.check(env, a) for a in e.items]
            if not ts:
                return Arr(0, REAL)
            for t in ts[1:]:
                _expect(ts[0], t, "array literal")
            return Arr(len(ts), ts[0])
        raise UnsupportedConstruct(type(e).__name__)

    def check_fold(self, env: dict[str, Type], e: Fold) -> Type:
        if isinstance(e, Reduce):
            pass
        elif isinstance(e, Foldl):
            self.need_target(e, "foldl")
        else:
            self.need_target(e)
        ti = self.check(env, e.init)
        a = _array(self.check(env, e.arg), type(e).__name__.lower())
        if not self.target:
            _expect(REAL, ti, "fold initial value")
            _expect(REAL, a.elem, "fold array element")
            if isinstance(e, Reduce) and "reduce-open" not in self.ext:
                for v in sorted(free_vars(e.body) - {e.x, e.y}):
                    raise IllegalFreeVariableInReduce(v)
        inner = self.bind(self.bind(env, e.x, ti), e.y, a.elem)
        tb = self.check(inner, e.body)
        _expect(ti, tb, "fold body")
        n = a.size
        if isinstance(e, (Reduce, Foldl)):
            return ti
        if isinstance(e, (Scanl, Scanr)):
            return Arr(n + 1, ti)
        if isinstance(e, ScanlPair):
            return Prod((Arr(n, ti), ti))
        if isinstance(e, ScanrPair):
            return Prod((ti, Arr(n, ti)))
        raise UnsupportedConstruct(type(e).__name__)


def _env(ctx: Context) -> dict[str, Type]:
    return {n: t for n, t in ctx}


def typecheck_source(ctx: Context, e: Term, extensions: Iterable[str] = ()) -> Type:
    for _, t in ctx:
        if not is_ground(t):
            raise TypeMismatch("ground type", t, "context")
    return _Checker(False, extensions, None).check(_env(ctx), e)


def typecheck_target(ctx: Context, e: Term, on_bind: BindHook = None) -> Type:
    return _Checker(True, EXTENSIONS, on_bind).check(_env(ctx), e)


def binder_types(ctx: Context, e: Term) -> tuple[Type, dict[str, list[Type]]]:
    """Type ``e`` and record the type of every binder it introduces."""
    seen: dict[str, list[Type]] = {}

    def hook(name: str, t: Type) -> None:
        seen.setdefault(name, []).append(t)

    return typecheck_target(ctx, e, hook), seen



def type_in_env(env: dict[str, Type], e: Term) -> Type:
    """Target typing under a plain name -> type mapping."""
    return _Checker(True, EXTENSIONS, None).check(env, e)
