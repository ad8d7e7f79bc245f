"""Numerical checks: central finite differences and random-point equivalence."""

from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .core import REAL, Binary, Context, Term, subterms
from .errors import NotScalarOutput, TypeDisagreement
from .evaluator import eval_gradient_entry, eval_term
from .typecheck import typecheck_source, typecheck_target
from .values import ArrayV, Value, flatten, scalar_count, unflatten

DEFAULT_H = 1e-4
REL_TOL = 1e-5
ABS_TOL = 1e-8


def within_tolerance(ad: float, fd: float) -> bool:
    return abs(ad - fd) <= REL_TOL * max(1.0, abs(fd)) + ABS_TOL


def _point_from_flat(ctx: Context, xs: list[float]) -> list[Value]:
    out, k = [], 0
    for _, t in ctx:
        v, k = unflatten(t, xs, k)
        out.append(v)
    return out


def finite_diff_gradient(ctx: Context, e: Term, point: Sequence[Value], h: float = DEFAULT_H,
                         extensions: Iterable[str] = ()) -> tuple:
    """Central differences for every scalar coordinate, reshaped like ``ctx``."""
    if typecheck_source(ctx, e, extensions) != REAL:
        raise NotScalarOutput("finite differences need a real-valued program")
    base = [c for v in point for c in flatten(v)]

    def f(xs: list[float]) -> float:
        return eval_term(dict(zip(ctx.names, _point_from_flat(ctx, xs))), e)

    grads = []
    for i in range(len(base)):
        up, down = list(base), list(base)
        up[i] += h
        down[i] -= h
        grads.append((f(up) - f(down)) / (2 * h))
    return tuple(_point_from_flat(ctx, grads))


def _denominators(e: Term) -> list[Term]:
    return [t.right for t in subterms(e) if isinstance(t, Binary) and t.op == "/"]


def sample_point(ctx: Context, rng: random.Random, e: Optional[Term] = None,
                 lo: float = -2.0, hi: float = 2.0, guard: float = 0.1,
                 domain: Optional[Callable[[dict], bool]] = None) -> list[Value]:
    """A uniform random point, resampled away from small denominators."""
    n = sum(scalar_count(t) for _, t in ctx)
    dens = _denominators(e) if e is not None else []
    for _ in range(1000):
        pt = _point_from_flat(ctx, [rng.uniform(lo, hi) for _ in range(n)])
        env = dict(zip(ctx.names, pt))
        if domain is not None and not domain(env):
            continue
        if dens and not _denominators_ok(e, env, guard):
            continue
        return pt
    raise ValueError("could not sample a point satisfying the domain guard")


def _denominators_ok(e: Term, env: dict, guard: float) -> bool:
    """Every ``/`` evaluated while computing ``e`` at ``env`` has |denominator| >= guard."""
    from .evaluator import Evaluator

    seen: list[float] = []

    class Watch(Evaluator):
        def eval(self, env2, t):
            if isinstance(t, Binary) and t.op == "/":
                den = super().eval(env2, t.right)
                if isinstance(den, float):
                    seen.append(den)
            return super().eval(env2, t)

    try:
        Watch().eval(env, e)
    except Exception:
        return False
    return all(abs(d) >= guard for d in seen)


def max_rel_error(ad: Sequence[Value], fd: Sequence[Value]) -> tuple[float, bool]:
    a = [c for v in ad for c in flatten(v)]
    f = [c for v in fd for c in flatten(v)]
    if len(a) != len(f):
        return math.inf, False
    worst, ok = 0.0, True
    for x, y in zip(a, f):
        err = abs(x - y) / max(1.0, abs(y))
        if not math.isfinite(err):
            err = math.inf
        worst = max(worst, err)
        ok = ok and within_tolerance(x, y)
    return worst, ok


@dataclass
class GradReport:
    program: str
    seed: int
    h: float
    points: int
    passed: bool
    max_rel_error: dict[str, float] = field(default_factory=dict)
    pipelines_agree: Optional[bool] = None
    max_pipeline_diff: Optional[float] = None
    failures: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def check_gradient(ctx: Context, e: Term, n_points: int = 20, seed: int = 0, h: float = DEFAULT_H,
                   extensions: Iterable[str] = (), methods: Sequence[str] = ("direct", "unf"),
                   program: str = "<term>", domain=None) -> GradReport:
    """Compare the requested gradient pipelines against finite differences."""
    from .optimizer import partial_evaluate
    from .reverse import gradient

    ext = tuple(extensions)
    grads: dict[str, Term] = {}
    for m in methods:
        if m == "direct":
            grads[m] = partial_evaluate(gradient(ctx, e, ext))
        elif m == "unf":
            from .unf_pipeline import pipeline_gradient

            grads[m] = partial_evaluate(pipeline_gradient(ctx, e, ext))
        else:
            raise ValueError(f"unknown method {m!r}")
    rng = random.Random(seed)
    report = GradReport(program, seed, h, n_points, True, {m: 0.0 for m in grads})
    worst_pipe = 0.0
    for _ in range(n_points):
        pt = sample_point(ctx, rng, e, domain=domain)
        fd = finite_diff_gradient(ctx, e, pt, h, ext)
        values = {}
        for m, g in grads.items():
            ad = eval_gradient_entry(ctx, g, pt)
            values[m] = ad
            err, ok = max_rel_error(ad, fd)
            report.max_rel_error[m] = max(report.max_rel_error[m], err)
            if not ok:
                report.passed = False
                report.failures.append({"method": m, "point": _plain(pt), "ad": _plain(ad), "fd": _plain(fd)})
        if len(values) == 2:
            d = _max_rel_diff(*values.values())
            worst_pipe = max(worst_pipe, d)
    if len(grads) == 2:
        report.max_pipeline_diff = worst_pipe
        report.pipelines_agree = worst_pipe <= 1e-9
        report.passed = report.passed and report.pipelines_agree
    return report


def _plain(v):
    if isinstance(v, (tuple, list, ArrayV)):
        return [_plain(a) for a in v]
    return v


def _max_rel_diff(a, b) -> float:
    xs = [c for v in a for c in flatten(v)]
    ys = [c for v in b for c in flatten(v)]
    worst = 0.0
    for x, y in zip(xs, ys):
        if x == y:
            continue
        worst = max(worst, abs(x - y) / max(1.0, abs(x), abs(y)))
    return worst


def _values_close(a: Value, b: Value, tol: float) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b
    if isinstance(a, float) and isinstance(b, float):
        if a == b or (math.isnan(a) and math.isnan(b)):
            return True
        return abs(a - b) <= tol * max(1.0, abs(a), abs(b))
    if isinstance(a, tuple) and isinstance(b, tuple):
        return (isinstance(a, ArrayV) == isinstance(b, ArrayV) and len(a) == len(b)
                and all(_values_close(x, y, tol) for x, y in zip(a, b)))
    return False


def semantic_equiv(t1: Term, t2: Term, ctx: Context, n_points: int = 20, tol: float = 0.0,
                   seed: int = 0) -> bool:
    """Evaluate both terms at seeded random points and compare the results."""
    ty1, ty2 = typecheck_target(ctx, t1), typecheck_target(ctx, t2)
    if ty1 != ty2:
        raise TypeDisagreement(f"{ty1} vs {ty2}")
    rng = random.Random(seed)
    for _ in range(n_points):
        pt = sample_point(ctx, rng)
        env = dict(zip(ctx.names, pt))
        if not _values_close(eval_term(env, t1), eval_term(env, t2), tol):
            return False
    return True
