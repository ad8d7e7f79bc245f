from __future__ import annotations

from pathlib import Path

import pytest

from revad.syntax import parse_program, parse_values, pragma_extensions

ROOT = Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "programs"
GOLDENS = Path(__file__).resolve().parent / "goldens"


class CorpusProgram:
    def __init__(self, path: Path) -> None:
        text = path.read_text()
        self.name = path.stem
        self.path = path
        self.ctx, self.term = parse_program(text)
        self.extensions = pragma_extensions(text)
        vals = path.with_suffix(".vals")
        self.values = parse_values(vals.read_text()) if vals.exists() else None

    @property
    def point(self) -> list:
        return [self.values[n] for n in self.ctx.names]

    def __repr__(self) -> str:
        return self.name


def load_corpus() -> list[CorpusProgram]:
    return [CorpusProgram(p) for p in sorted(PROGRAMS.glob("*.src"))]


CORPUS = load_corpus()


def by_name(name: str) -> CorpusProgram:
    return next(p for p in CORPUS if p.name == name)


@pytest.fixture(params=CORPUS, ids=lambda p: p.name)
def program(request) -> CorpusProgram:
    return request.param


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter) -> None:
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
