"""Rewrite tests/goldens/* from the current transformations."""

import sys
from pathlib import Path

TESTS = Path(__file__).resolve().parent.parent / "tests"
sys.path.insert(0, str(TESTS))

from golden_cases import GOLDENS  # noqa: E402


def main() -> None:
    out = TESTS / "goldens"
    out.mkdir(exist_ok=True)
    for name, build in GOLDENS.items():
        (out / name).write_text(build() + "\n")
        print(f"wrote {out / name}")


if __name__ == "__main__":
    main()
