"""Compare the two open-reduce adjoint chains against finite differences.

The program is reduce (x y. x + c * y) 0 A at A = [1, 2, 3, 4], c = 0.5, so
the true derivative with respect to c is sum(A) = 10.
"""

from revad.evaluator import eval_gradient_entry
from revad.gradcheck import finite_diff_gradient
from revad.optimizer import partial_evaluate
from revad.reverse import gradient
from revad.syntax import parse_program
from revad.values import ArrayV

SOURCE = "ctx A : real^4, c : real; reduce (x y. x + c * y) 0 A"


def main() -> None:
    ctx, e = parse_program(SOURCE)
    point = [ArrayV((1.0, 2.0, 3.0, 4.0)), 0.5]
    _, fd = finite_diff_gradient(ctx, e, point, extensions=("reduce-open",))
    print(f"finite differences: d/dc = {fd:.6f}")
    for variant in ("corrected", "uncorrected"):
        g = partial_evaluate(gradient(ctx, e, ("reduce-open",), reduce_variant=variant))
        _, dc = eval_gradient_entry(ctx, g, point)
        print(f"{variant:>12}: d/dc = {dc}")


if __name__ == "__main__":
    main()
