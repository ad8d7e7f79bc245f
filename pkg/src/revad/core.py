"""Types, contexts and terms shared by the Source and Target languages.

Source is a sublanguage of Target, so a single family of term classes is
used for both; the two type checkers decide which constructors are legal.
Every term is an immutable dataclass.  Binder-aware traversal is driven by
the ``SPEC`` table on each class, which lists the sub-term fields together
with the binder fields that scope over them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Callable, ClassVar, Iterable, Iterator, Optional, Union


# ---------------------------------------------------------------- types


class Type:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Real(Type):
    def __str__(self) -> str:
        return "real"


@dataclass(frozen=True, slots=True)
class Bool(Type):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True, slots=True)
class Prod(Type):
    items: tuple[Type, ...]

    def __str__(self) -> str:
        return "(" + " * ".join(map(str, self.items)) + ")"


@dataclass(frozen=True, slots=True)
class Arr(Type):
    size: int
    elem: Type = field(default_factory=Real)

    def __str__(self) -> str:
        if isinstance(self.elem, Real):
            return f"real^{self.size}"
        return f"({self.elem})^{self.size}"


@dataclass(frozen=True, slots=True)
class Fun(Type):
    dom: tuple[Type, ...]
    cod: Type

    def __str__(self) -> str:
        return "(" + ", ".join(map(str, self.dom)) + ") -> " + str(self.cod)


@dataclass(frozen=True, slots=True)
class TVar(Type):
    """An opaque answer type, used for the continuation result rho."""

    name: str = "rho"

    def __str__(self) -> str:
        return self.name


REAL = Real()
BOOL = Bool()


def is_ground(t: Type) -> bool:
    if isinstance(t, Real):
        return True
    if isinstance(t, Prod):
        return all(is_ground(a) for a in t.items)
    if isinstance(t, Arr):
        return is_ground(t.elem)
    return False


def tuple_type(types: Iterable[Type]) -> Prod:
    return Prod(tuple(types))


# ---------------------------------------------------------------- contexts


@dataclass(frozen=True, slots=True)
class Context:
    entries: tuple[tuple[str, Type], ...] = ()

    def __post_init__(self) -> None:
        names = [n for n, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate names in context: {names}")

    @classmethod
    def of(cls, *pairs: tuple[str, Type]) -> "Context":
        return cls(tuple(pairs))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.entries)

    @property
    def types(self) -> tuple[Type, ...]:
        return tuple(t for _, t in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[str, Type]]:
        return iter(self.entries)

    def __contains__(self, name: object) -> bool:
        return any(n == name for n, _ in self.entries)

    def lookup(self, name: str) -> Type:
        for n, t in self.entries:
            if n == name:
                return t
        raise KeyError(name)

    def pos(self, name: str) -> int:
        """1-based position of ``name``."""
        for i, (n, _) in enumerate(self.entries):
            if n == name:
                return i + 1
        raise KeyError(name)

    def extend(self, name: str, t: Type) -> "Context":
        return Context(self.entries + ((name, t),))

    def restrict(self, names: Iterable[str]) -> "Context":
        keep = set(names)
        return Context(tuple(e for e in self.entries if e[0] in keep))

    def __str__(self) -> str:
        return ", ".join(f"{n}:{t}" for n, t in self.entries)


# ---------------------------------------------------------------- terms


class Term:
    """Base class.  ``SPEC`` is a tuple of (field, binder-fields, is_list)."""

    __slots__ = ()
    SPEC: ClassVar[tuple[tuple[str, tuple[str, ...], bool], ...]] = ()

    def __str__(self) -> str:
        from .syntax import print_term

        return print_term(self)


def _t(name: str, binders: tuple[str, ...] = (), many: bool = False):
    return (name, binders, many)


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str


@dataclass(frozen=True, slots=True)
class Const(Term):
    value: Union[float, bool]


@dataclass(frozen=True, slots=True)
class Let(Term):
    name: str
    bound: Term
    body: Term
    SPEC = (_t("bound"), _t("body", ("name",)))


@dataclass(frozen=True, slots=True)
class LetTuple(Term):
    """Destructuring let: ``let a, b = e in body``."""

    names: tuple[str, ...]
    bound: Term
    body: Term
    SPEC = (_t("bound"), _t("body", ("names",)))


@dataclass(frozen=True, slots=True)
class Tuple(Term):
    items: tuple[Term, ...]
    SPEC = (_t("items", many=True),)


@dataclass(frozen=True, slots=True)
class Proj(Term):
    index: int  # 1-based
    arg: Term
    SPEC = (_t("arg"),)


@dataclass(frozen=True, slots=True)
class Unary(Term):
    op: str
    arg: Term
    SPEC = (_t("arg"),)


@dataclass(frozen=True, slots=True)
class Binary(Term):
    op: str
    left: Term
    right: Term
    SPEC = (_t("left"), _t("right"))


@dataclass(frozen=True, slots=True)
class If(Term):
    cond: Term
    then: Term
    orelse: Term
    SPEC = (_t("cond"), _t("then"), _t("orelse"))


@dataclass(frozen=True, slots=True)
class Map2(Term):
    x: str
    y: str
    body: Term
    left: Term
    right: Term
    SPEC = (_t("body", ("x", "y")), _t("left"), _t("right"))


@dataclass(frozen=True, slots=True)
class Map(Term):
    x: str
    body: Term
    arg: Term
    SPEC = (_t("body", ("x",)), _t("arg"))


class Fold(Term):
    """Shared shape of reduce, foldl and the scans: (x,y.body) init arg."""

    __slots__ = ()
    KEYWORD: ClassVar[str] = ""
    SPEC = (_t("body", ("x", "y")), _t("init"), _t("arg"))


@dataclass(frozen=True, slots=True)
class Reduce(Fold):
    x: str
    y: str
    body: Term
    init: Term
    arg: Term
    KEYWORD = "reduce"


@dataclass(frozen=True, slots=True)
class Foldl(Fold):
    x: str
    y: str
    body: Term
    init: Term
    arg: Term
    KEYWORD = "foldl"


@dataclass(frozen=True, slots=True)
class Scanl(Fold):
    x: str
    y: str
    body: Term
    init: Term
    arg: Term
    KEYWORD = "scanl"


@dataclass(frozen=True, slots=True)
class Scanr(Fold):
    x: str
    y: str
    body: Term
    init: Term
    arg: Term
    KEYWORD = "scanr"


@dataclass(frozen=True, slots=True)
class ScanlPair(Fold):
    """scanl returning (first n intermediates, final accumulator)."""

    x: str
    y: str
    body: Term
    init: Term
    arg: Term
    KEYWORD = "scanlpair"


@dataclass(frozen=True, slots=True)
class ScanrPair(Fold):
    """scanr returning (full product, remaining n intermediates)."""

    x: str
    y: str
    body: Term
    init: Term
    arg: Term
    KEYWORD = "scanrpair"


FOLD_CLASSES: dict[str, type] = {
    c.KEYWORD: c for c in (Reduce, Foldl, Scanl, Scanr, ScanlPair, ScanrPair)
}


@dataclass(frozen=True, slots=True)
class Shift1L(Term):
    arg: Term
    SPEC = (_t("arg"),)


@dataclass(frozen=True, slots=True)
class Shift1R(Term):
    arg: Term
    SPEC = (_t("arg"),)


@dataclass(frozen=True, slots=True)
class Lambda(Term):
    params: tuple[str, ...]
    body: Term
    # Parameter types; ``None`` entries come from unannotated surface syntax.
    types: tuple[Optional[Type], ...] = ()
    SPEC = (_t("body", ("params",)),)

    def __post_init__(self) -> None:
        if not self.types:
            object.__setattr__(self, "types", (None,) * len(self.params))
        if len(self.types) != len(self.params):
            raise ValueError("lambda parameter/type arity mismatch")


@dataclass(frozen=True, slots=True)
class Apply(Term):
    fn: Term
    args: tuple[Term, ...]
    SPEC = (_t("fn"), _t("args", many=True))


@dataclass(frozen=True, slots=True)
class ArrayLit(Term):
    """Array literal; only produced by evaluation and value files."""

    items: tuple[Term, ...]
    SPEC = (_t("items", many=True),)


# ---------------------------------------------------------------- handy builders


def var(name: str) -> Var:
    return Var(name)


def const(v: float) -> Const:
    return Const(float(v))


def add(a: Term, b: Term) -> Binary:
    return Binary("+", a, b)


def mul(a: Term, b: Term) -> Binary:
    return Binary("*", a, b)


def lets(bindings: Iterable[tuple[str, Term]], body: Term) -> Term:
    out = body
    for name, bound in reversed(list(bindings)):
        out = Let(name, bound, out)
    return out


# ---------------------------------------------------------------- generic traversal


def _binder_names(e: Term, binder_fields: tuple[str, ...]) -> tuple[str, ...]:
    out: list[str] = []
    for f in binder_fields:
        v = getattr(e, f)
        if isinstance(v, str):
            out.append(v)
        else:
            out.extend(v)
    return tuple(out)


def children(e: Term) -> list[tuple[Term, tuple[str, ...]]]:
    """Immediate sub-terms in field order, each with the names bound over it."""
    out: list[tuple[Term, tuple[str, ...]]] = []
    for name, binders, many in e.SPEC:
        bs = _binder_names(e, binders)
        v = getattr(e, name)
        if many:
            out.extend((c, bs) for c in v)
        else:
            out.append((v, bs))
    return out


def map_children(e: Term, f: Callable[[Term, tuple[str, ...]], Term]) -> Term:
    if not e.SPEC:
        return e
    changes = {}
    for name, binders, many in e.SPEC:
        bs = _binder_names(e, binders)
        v = getattr(e, name)
        if many:
            new = tuple(f(c, bs) for c in v)
            if any(a is not b for a, b in zip(new, v)):
                changes[name] = new
        else:
            new = f(v, bs)
            if new is not v:
                changes[name] = new
    return replace(e, **changes) if changes else e


def subterms(e: Term) -> Iterator[Term]:
    """Pre-order iteration over all sub-terms including ``e``."""
    stack = [e]
    while stack:
        t = stack.pop()
        yield t
        stack.extend(reversed([c for c, _ in children(t)]))


def term_size(e: Term) -> int:
    return sum(1 for _ in subterms(e))


def free_vars(e: Term) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    out: set[str] = set()
    for c, bs in children(e):
        fv = free_vars(c)
        out.update(fv.difference(bs) if bs else fv)
    return frozenset(out)


def count_free(e: Term, name: str) -> int:
    if isinstance(e, Var):
        return 1 if e.name == name else 0
    return sum(count_free(c, name) for c, bs in children(e) if name not in bs)


def all_names(e: Term) -> set[str]:
    """Every variable name occurring in ``e``, free or bound."""
    out: set[str] = set()
    for t in subterms(e):
        if isinstance(t, Var):
            out.add(t.name)
        for name, binders, _ in t.SPEC:
            out.update(_binder_names(t, binders))
    return out


class NameSupply:
    """Deterministic fresh-name generator scoped to one transformation."""

    def __init__(self, avoid: Iterable[str] = ()) -> None:
        self.used: set[str] = set(avoid)
        self.counters: dict[str, int] = {}

    def avoid(self, names: Iterable[str]) -> None:
        self.used.update(names)

    def fresh(self, base: str = "t") -> str:
        base = base.rstrip("0123456789_'") or "t"
        k = self.counters.get(base, 0)
        while True:
            k += 1
            name = f"{base}{k}"
            if name not in self.used:
                break
        self.counters[base] = k
        self.used.add(name)
        return name


def _fresh_like(base: str, avoid: set[str]) -> str:
    stem = base.rstrip("'")
    k = 1
    while f"{stem}_{k}" in avoid:
        k += 1
    return f"{stem}_{k}"


def _rename_binders(e: Term, binder_fields: tuple[str, ...], ren: dict[str, str]) -> Term:
    changes = {}
    for f in binder_fields:
        v = getattr(e, f)
        if isinstance(v, str):
            changes[f] = ren.get(v, v)
        else:
            changes[f] = tuple(ren.get(n, n) for n in v)
    return replace(e, **changes)


def substitute_many(e: Term, sub: dict[str, Term]) -> Term:
    """Simultaneous capture-avoiding substitution."""
    if not sub:
        return e
    if isinstance(e, Var):
        return sub.get(e.name, e)
    if not e.SPEC:
        return e
    sub_fv: set[str] = set()
    for v in sub.values():
        sub_fv.update(free_vars(v))

    # Handle each (field, binders) group; binders of one group scope over one field.
    changes: dict[str, object] = {}
    new_e = e
    for fname, bfields, many in e.SPEC:
        bs = _binder_names(e, bfields)
        local = {k: v for k, v in sub.items() if k not in bs} if bs else sub
        value = getattr(e, fname)
        if not local:
            continue
        if bs:
            local_fv: set[str] = set()
            for v in local.values():
                local_fv.update(free_vars(v))
            clash = [b for b in bs if b in local_fv]
            if clash:
                avoid = set(local_fv) | set(local) | all_names(value) | set(bs)
                ren: dict[str, str] = {}
                for b in clash:
                    nb = _fresh_like(b, avoid)
                    avoid.add(nb)
                    ren[b] = nb
                value = substitute_many(value, {b: Var(n) for b, n in ren.items()})
                new_e = _rename_binders(new_e, bfields, ren)
        if many:
            changes[fname] = tuple(substitute_many(c, local) for c in value)
        else:
            changes[fname] = substitute_many(value, local)
    return replace(new_e, **changes) if changes else new_e


def substitute(e: Term, x: str, v: Term) -> Term:
    return substitute_many(e, {x: v})


def rename_bound(e: Term, supply: NameSupply | None = None) -> Term:
    """Give every binder in ``e`` a fresh name (an alpha-equivalent copy)."""
    supply = supply or NameSupply(all_names(e))

    def go(t: Term) -> Term:
        if isinstance(t, Var) or not t.SPEC:
            return t
        changes: dict[str, object] = {}
        new_t = t
        for fname, bfields, many in t.SPEC:
            value = getattr(t, fname)
            if bfields:
                bs = _binder_names(t, bfields)
                ren = {b: supply.fresh(b) for b in bs}
                value = substitute_many(value, {b: Var(n) for b, n in ren.items()})
                new_t = _rename_binders(new_t, bfields, ren)
            changes[fname] = tuple(go(c) for c in value) if many else go(value)
        return replace(new_t, **changes)

    return go(e)


def _scalar_fields(e: Term) -> tuple:
    """Non-term, non-binder payload (op names, constants, indices)."""
    skip = set()
    for fname, bfields, _ in e.SPEC:
        skip.add(fname)
        skip.update(bfields)
    skip.add("types")
    return tuple(
        getattr(e, f.name) for f in fields(e) if f.name not in skip
    )


def _const_eq(a: object, b: object) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    return a == b or (a != a and b != b)


def alpha_equal(a: Term, b: Term) -> bool:
    def go(x: Term, y: Term, ex: dict[str, int], ey: dict[str, int], depth: int) -> bool:
        if type(x) is not type(y):
            return False
        if isinstance(x, Var):
            ix, iy = ex.get(x.name), ey.get(y.name)
            if ix is None and iy is None:
                return x.name == y.name
            return ix == iy
        if isinstance(x, Const):
            return _const_eq(x.value, y.value)
        if not all(_const_eq(p, q) for p, q in zip(_scalar_fields(x), _scalar_fields(y))):
            return False
        cx, cy = children(x), children(y)
        if len(cx) != len(cy):
            return False
        for (tx, bx), (ty, by) in zip(cx, cy):
            if len(bx) != len(by):
                return False
            nx, ny = dict(ex), dict(ey)
            d = depth
            for u, v in zip(bx, by):
                d += 1
                nx[u] = d
                ny[v] = d
            if not go(tx, ty, nx, ny, d):
                return False
        return True

    return go(a, b, {}, {}, 0)


def freshen_source(e: Term, ctx: Context) -> Term:
    """Rename binders so no binder shadows another binder or a context name."""
    supply = NameSupply(set(ctx.names) | all_names(e))
    seen: set[str] = set(ctx.names)

    def go(t: Term) -> Term:
        if isinstance(t, Var) or not t.SPEC:
            return t
        changes: dict[str, object] = {}
        new_t = t
        for fname, bfields, many in t.SPEC:
            value = getattr(t, fname)
            if bfields:
                bs = _binder_names(t, bfields)
                ren = {}
                for b in bs:
                    if b in seen:
                        ren[b] = supply.fresh(b)
                    seen.add(ren.get(b, b))
                if ren:
                    value = substitute_many(value, {b: Var(n) for b, n in ren.items()})
                    new_t = _rename_binders(new_t, bfields, ren)
            changes[fname] = tuple(go(c) for c in value) if many else go(value)
        return replace(new_t, **changes)

    return go(e)
