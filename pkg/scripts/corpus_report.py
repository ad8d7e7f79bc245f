"""Gradient check and cheap-gradient report for every program in programs/.

Usage: python3 scripts/corpus_report.py [--points N] [--seed S] [--json]
"""

import argparse
import json
from pathlib import Path

from revad.cost import check_cheap_gradient
from revad.gradcheck import check_gradient
from revad.syntax import parse_program, pragma_extensions

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"
RULE_SETS = ("pe", "pe+algebra", "all")


def report(path: Path, points: int, seed: int) -> dict:
    text = path.read_text()
    ctx, e = parse_program(text)
    ext = pragma_extensions(text)
    g = check_gradient(ctx, e, points, seed, extensions=ext, program=path.stem)
    row = {"program": path.stem, "passed": g.passed, "max_rel_error": g.max_rel_error,
           "max_pipeline_diff": g.max_pipeline_diff, "cost": {}}
    for rules in RULE_SETS:
        c = check_cheap_gradient(ctx, e, ext, rules)
        row["cost"][rules] = {"grad": c.cost_grad.as_tuple(), "bound": c.bound.as_tuple(),
                              "p": c.p, "holds": c.holds, "holds_total": c.holds_total}
    return row


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()
    rows = [report(p, args.points, args.seed) for p in sorted(PROGRAMS.glob("*.src"))]
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    print(f"{'program':<13} {'grad':<5} {'err':>8}  " + "  ".join(f"{r:>14}" for r in RULE_SETS))
    for r in rows:
        err = max(r["max_rel_error"].values())
        flags = []
        for rules in RULE_SETS:
            c = r["cost"][rules]
            flags.append(f"{'ok' if c['holds'] else 'no'}/{'ok' if c['holds_total'] else 'no':<3} p={c['p']}")
        print(f"{r['program']:<13} {'pass' if r['passed'] else 'FAIL':<5} {err:8.1e}  "
              + "  ".join(f"{f:>14}" for f in flags))
    print("\ncost columns: componentwise/total bound, p = array nesting depth")


if __name__ == "__main__":
    main()
