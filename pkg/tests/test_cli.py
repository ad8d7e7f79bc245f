import json

from click.testing import CliRunner
import pytest

from conftest import GOLDENS, PROGRAMS
from revad.cli import main
from revad.syntax import parse_term
from revad.core import alpha_equal


def run(*args, env=None):
    return CliRunner().invoke(main, [str(a) for a in args], env=env)


def prog(name):
    return PROGRAMS / f"{name}.src"


def test_check_prints_the_type():
    r = run("check", prog("intro"))
    assert r.exit_code == 0 and r.stdout.strip().endswith(": real")


def test_check_reports_type_errors(tmp_path):
    bad = tmp_path / "bad.src"
    bad.write_text("ctx x : real, A : real^3; x + A")
    r = run("check", bad)
    assert r.exit_code == 1 and "error:" in r.stderr


def test_syntax_errors_exit_one(tmp_path):
    bad = tmp_path / "bad.src"
    bad.write_text("ctx x : real; x + * 2")
    assert run("check", bad).exit_code == 1


def test_missing_file_exits_one(tmp_path):
    assert run("check", tmp_path / "nope.src").exit_code == 1


def test_open_reduce_needs_the_flag(tmp_path):
    f = tmp_path / "open.src"
    f.write_text("ctx A : real^3, c : real; reduce (x y. x + c * y) 0 A")
    assert run("check", f).exit_code == 1
    assert run("check", f, "--ext", "reduce-open").exit_code == 0


def test_grad_matches_the_intro_golden():
    r = run("grad", prog("intro"), "--opt", "all")
    assert r.exit_code == 0
    assert r.stdout.strip() == (GOLDENS / "intro_gradient_all.txt").read_text().strip()


def test_grad_rules_alias_and_unf_method():
    a = run("grad", prog("prod"), "--rules", "all", "--method", "unf")
    b = run("grad", prog("prod"), "--opt", "all", "--method", "direct")
    assert a.exit_code == b.exit_code == 0
    assert alpha_equal(parse_term(a.stdout), parse_term(b.stdout))


def test_grad_both_methods():
    assert run("grad", prog("nested_map2"), "--method", "both").exit_code == 0


def test_grad_writes_a_file(tmp_path):
    out = tmp_path / "g.txt"
    r = run("grad", prog("sum"), "--opt", "all", "-o", out)
    assert r.exit_code == 0 and r.stdout == ""
    assert alpha_equal(parse_term(out.read_text()), parse_term("<map (x. 1) A>"))


def test_eval_program_and_gradient():
    r = run("eval", prog("intro"), PROGRAMS / "intro.vals")
    assert r.exit_code == 0 and float(r.stdout) == 45.0
    r = run("eval", prog("intro"), PROGRAMS / "intro.vals", "--grad")
    assert r.exit_code == 0 and "30" in r.stdout and "9" in r.stdout


def test_eval_rejects_missing_values(tmp_path):
    vals = tmp_path / "v.vals"
    vals.write_text("x1 = 1\n")
    assert run("eval", prog("intro"), vals).exit_code == 1


def test_eval_rejects_ill_shaped_values(tmp_path):
    vals = tmp_path / "v.vals"
    vals.write_text("A = [1, 2]\n")
    assert run("eval", prog("prod"), vals).exit_code == 1


def test_cost_of_prod_holds():
    r = run("cost", prog("prod"))
    assert r.exit_code == 0
    data = json.loads(r.stdout)
    assert data["holds"] is True and data["p"] == 1


def test_cost_of_source():
    r = run("cost", prog("prod"), "--of", "source")
    data = json.loads(r.stdout)
    assert data["nao"] == 1 and data["mults"] == 16


def test_cost_violation_exits_two():
    r = run("cost", prog("constant"))
    assert r.exit_code == 2 and json.loads(r.stdout)["holds"] is False


def test_verify_prod():
    r = run("verify", prog("prod"), "--points", 20, "--seed", 7)
    assert r.exit_code == 0
    data = json.loads(r.stdout)
    assert data["passed"] and data["seed"] == 7 and data["pipelines_agree"]


def test_verify_seed_from_environment():
    r = run("verify", prog("dot"), "--points", 3, env={"ADC_SEED": "11"})
    assert r.exit_code == 0 and json.loads(r.stdout)["seed"] == 11
    r = run("verify", prog("dot"), "--points", 3, env={"ADC_SEED": "eleven"})
    assert r.exit_code == 1


@pytest.mark.parametrize("method", ["direct", "unf"])
def test_verify_single_method(method):
    r = run("verify", prog("expcos"), "--points", 5, "--method", method)
    data = json.loads(r.stdout)
    assert r.exit_code == 0 and list(data["max_rel_error"]) == [method]


def test_verify_failure_exits_two(tmp_path):
    # a step far too large for a curved function makes the oracle disagree
    f = tmp_path / "cube.src"
    f.write_text("ctx x : real; x * x * x")
    r = run("verify", f, "--points", 5, "--h", 0.5)
    assert r.exit_code == 2 and json.loads(r.stdout)["passed"] is False


def test_pragma_enables_extensions():
    assert run("verify", prog("cond"), "--points", 5).exit_code == 0


def test_version():
    assert run("--version").exit_code == 0
