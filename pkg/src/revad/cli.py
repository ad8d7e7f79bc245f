"""Command-line driver: ``revad check|grad|eval|cost|verify``."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .core import Term
from .errors import RevadError
from .syntax import parse_program, parse_values, pragma_extensions, print_term

EXIT_OK, EXIT_INPUT, EXIT_FAILED = 0, 1, 2
OPT_LEVELS = ("none", "pe", "pe+algebra", "all")


class Program:
    def __init__(self, path: str, ext: str = "") -> None:
        text = Path(path).read_text(encoding="utf-8")
        self.path = path
        self.ctx, self.term = parse_program(text)
        extra = tuple(s.strip() for s in ext.split(",") if s.strip())
        self.extensions = tuple(dict.fromkeys(pragma_extensions(text) + extra))


def _fail(msg: str, code: int = EXIT_INPUT) -> None:
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _load(path: str, ext: str = "") -> Program:
    try:
        return Program(path, ext)
    except OSError as err:
        _fail(f"{path}: {err.strerror or err}")
    except RevadError as err:
        _fail(f"{path}: {err}")
    raise AssertionError("unreachable")


def _source_binders(e: Term) -> set[str]:
    from .core import Let, subterms

    return {t.name for t in subterms(e) if isinstance(t, Let)}


def build_gradient(prog: Program, method: str, opt: str) -> Term:
    from .optimizer import optimize
    from .reverse import gradient
    from .unf_pipeline import pipeline_gradient

    if method == "unf":
        g = pipeline_gradient(prog.ctx, prog.term, prog.extensions)
    else:
        g = gradient(prog.ctx, prog.term, prog.extensions)
    keep = _source_binders(prog.term) if opt == "all" else ()
    return optimize(g, opt, keep=keep)


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Source-to-source reverse-mode AD for a small array language."""


@main.command()
@click.argument("program", type=click.Path(dir_okay=False))
@click.option("--ext", default="", help="Comma-separated extensions (reduce-open,cond,foldl).")
def check(program: str, ext: str) -> None:
    """Typecheck PROGRAM and print its type."""
    from .typecheck import typecheck_source

    prog = _load(program, ext)
    try:
        t = typecheck_source(prog.ctx, prog.term, prog.extensions)
    except RevadError as err:
        _fail(f"{program}: {err}")
    click.echo(f"{program}: {t}")


@main.command()
@click.argument("program", type=click.Path(dir_okay=False))
@click.option("--method", type=click.Choice(["direct", "unf", "both"]), default="direct")
@click.option("--opt", "--rules", "opt", type=click.Choice(OPT_LEVELS), default="pe",
              help="Optimization level applied to the gradient.")
@click.option("--ext", default="", help="Comma-separated extensions.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
def grad(program: str, method: str, opt: str, ext: str, output: str | None) -> None:
    """Print the gradient of PROGRAM as a Target term."""
    prog = _load(program, ext)
    try:
        if method == "both":
            from .gradcheck import semantic_equiv

            g = build_gradient(prog, "direct", opt)
            g2 = build_gradient(prog, "unf", opt)
            if not semantic_equiv(g, g2, prog.ctx, n_points=20, tol=1e-9):
                _fail("direct and UNF gradients disagree", EXIT_FAILED)
        else:
            g = build_gradient(prog, method, opt)
    except RevadError as err:
        _fail(f"{program}: {err}")
    text = print_term(g)
    if output:
        Path(output).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


@main.command(name="eval")
@click.argument("program", type=click.Path(dir_okay=False))
@click.argument("values", type=click.Path(dir_okay=False))
@click.option("--grad", "with_grad", is_flag=True, help="Evaluate the gradient instead.")
@click.option("--method", type=click.Choice(["direct", "unf"]), default="direct")
@click.option("--ext", default="", help="Comma-separated extensions.")
def eval_cmd(program: str, values: str, with_grad: bool, method: str, ext: str) -> None:
    """Evaluate PROGRAM (or its gradient) at the point given in VALUES."""
    from .evaluator import eval_term
    from .values import conforms, format_value

    prog = _load(program, ext)
    try:
        env = parse_values(Path(values).read_text(encoding="utf-8"))
    except OSError as err:
        _fail(f"{values}: {err.strerror or err}")
    except RevadError as err:
        _fail(f"{values}: {err}")
    for name, t in prog.ctx:
        if name not in env:
            _fail(f"{values}: no value for {name}")
        if not conforms(env[name], t):
            _fail(f"{values}: {name} is not a value of type {t}")
    try:
        term = build_gradient(prog, method, "pe") if with_grad else prog.term
        v = eval_term(env, term)
    except RevadError as err:
        _fail(f"{program}: {err}")
    click.echo(format_value(v))


@main.command()
@click.argument("program", type=click.Path(dir_okay=False))
@click.option("--of", "of", type=click.Choice(["source", "grad"]), default="grad")
@click.option("--opt", "--rules", "opt", type=click.Choice(OPT_LEVELS), default="pe+algebra",
              help="Optimization applied to the gradient before costing.")
@click.option("--ext", default="", help="Comma-separated extensions.")
def cost(program: str, of: str, opt: str, ext: str) -> None:
    """Print the cost vector, NAO and the cheap-gradient report as JSON."""
    from .cost import check_cheap_gradient, cost as cost_of, nao

    prog = _load(program, ext)
    try:
        if of == "source":
            c = cost_of(prog.term, prog.ctx)
            click.echo(json.dumps({"moves": c.moves, "adds": c.adds, "mults": c.mults,
                                   "nlops": c.nlops, "nao": nao(prog.term)}))
            return
        report = check_cheap_gradient(prog.ctx, prog.term, prog.extensions, rules=opt)
    except RevadError as err:
        _fail(f"{program}: {err}")
    click.echo(json.dumps(report.to_json()))
    if not report.holds:
        sys.exit(EXIT_FAILED)


@main.command()
@click.argument("program", type=click.Path(dir_okay=False))
@click.option("--points", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True, help="Overridden by $ADC_SEED.")
@click.option("--h", "h", default=1e-4, show_default=True, type=float)
@click.option("--method", type=click.Choice(["direct", "unf", "both"]), default="both")
@click.option("--ext", default="", help="Comma-separated extensions.")
def verify(program: str, points: int, seed: int, h: float, method: str, ext: str) -> None:
    """Check the gradients of PROGRAM against central finite differences."""
    from .gradcheck import check_gradient

    prog = _load(program, ext)
    env_seed = os.environ.get("ADC_SEED")
    if env_seed:
        try:
            seed = int(env_seed)
        except ValueError:
            _fail(f"ADC_SEED must be an integer, got {env_seed!r}")
    methods = ("direct", "unf") if method == "both" else (method,)
    try:
        report = check_gradient(prog.ctx, prog.term, points, seed, h, prog.extensions, methods,
                                program=program)
    except RevadError as err:
        _fail(f"{program}: {err}")
    click.echo(json.dumps(report.to_json()))
    if not report.passed:
        sys.exit(EXIT_FAILED)


if __name__ == "__main__":  # pragma: no cover
    main()
