import pytest

from zhukcsp import cli, harness
from zhukcsp.csp import parse_instance
from zhukcsp.errors import UbiquityViolated

NEQ = """\
algebra Z2
var x
var y
rel NEQ 2
0 1
1 0
end
con NEQ x y
"""

TRIANGLE = NEQ.replace("var y\n", "var y\nvar z\n") + "con NEQ y z\ncon NEQ x z\n"


@pytest.fixture
def neq(tmp_path):
    f = tmp_path / "neq.csp"
    f.write_text(NEQ)
    return str(f)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_with_assignment(capsys, neq):
    code, out, _ = run(capsys, "solve", "--instance", neq, "--assign")
    assert code == 0 and out.splitlines() == ["satisfiable", "x=0", "y=1"]


def test_solve_unsat_and_trace(capsys, tmp_path):
    f = tmp_path / "tri.csp"
    f.write_text(TRIANGLE)
    code, out, _ = run(capsys, "solve", "--instance", str(f), "--trace")
    lines = out.splitlines()
    assert code == 0 and lines[-1] == "unsatisfiable"
    assert all(ln.startswith("step ") for ln in lines[:-1])


def test_solve_trace_shows_linear_steps(capsys, neq):
    code, out, _ = run(capsys, "solve", "--instance", neq, "--trace")
    assert code == 0 and "step linear-step" in out and out.endswith("satisfiable\n")


def test_oracle(capsys, neq):
    assert run(capsys, "oracle", "--instance", neq, "--count")[:2] == (0, "2\n")
    code, out, _ = run(capsys, "oracle", "--instance", neq, "--assign")
    assert out.splitlines() == ["satisfiable", "x=0", "y=1"]


def test_analyze(capsys):
    code, out, _ = run(capsys, "analyze", "--algebra", "MAJ")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "algebra size=2 arity=3 flags=idempotent,wnu,special"
    assert lines[1:] == ["subuniverse {0} C TERN-ABS", "subuniverse {1} C TERN-ABS",
                         "congruence 0|1 irreducible=no"]
    code, out, _ = run(capsys, "analyze", "--algebra", "AND3")
    assert "subuniverse {0} BA" in out and "witness=" in out
    code, out, _ = run(capsys, "analyze", "--algebra", "Z2")
    assert "Linear(p=2)" in out and "subuniverse {0} -" in out


def test_xy(capsys, tmp_path):
    term = tmp_path / "w.term"
    code, out, _ = run(capsys, "xy", "--algebra", "Z2", "--term-out", str(term))
    assert code == 0 and out.splitlines() == ["size 2", "arity 3", "table 0 1 1 0 1 0 0 1"]
    assert term.read_text().strip()


def test_gen_to_file_and_stdout(capsys, tmp_path):
    out_file = tmp_path / "g.csp"
    assert run(capsys, "gen", "--seed", "42", "-o", str(out_file))[0] == 0
    code, out, _ = run(capsys, "gen", "--seed", "42")
    assert out == out_file.read_text()
    parse_instance(out)


def test_fuzz_clean(capsys):
    code, out, _ = run(capsys, "fuzz", "--algebra", "MAJ", "--cases", "30", "--seed", "3")
    assert code == 0 and out.startswith("algebra=MAJ cases=30 ")


def test_fuzz_mismatch_exit(capsys, monkeypatch):
    monkeypatch.setattr(harness.Solver, "solve", lambda self, inst: False)
    code, out, _ = run(capsys, "fuzz", "--cases", "5", "--planted")
    assert code == 1 and "expected=True got=False" in out


@pytest.mark.parametrize("argv", [
    ["solve", "--instance", "/nonexistent.csp"],
    ["analyze", "--algebra", "nowhere"],
    ["xy", "--algebra", "Z2", "--arity", "4"],
    ["gen", "--vars", "0"],
])
def test_input_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error: ")


def test_parse_error_exit_2(capsys, tmp_path):
    f = tmp_path / "bad.csp"
    f.write_text("algebra Z2\nvar x\nfoo x\n")
    code, _, err = run(capsys, "solve", "--instance", str(f))
    assert code == 2 and "line 3" in err


def test_cap_exceeded_exit_3(capsys, tmp_path):
    f = tmp_path / "free.csp"
    f.write_text("algebra Z2\n" + "".join(f"var x{i}\n" for i in range(8)))
    code, _, err = run(capsys, "--cap-product", "10", "oracle", "--instance", str(f))
    assert code == 3 and "cap 10 exceeded" in err


def test_internal_diagnostic_exit_4(capsys, neq, monkeypatch):
    def boom(self, inst):
        raise UbiquityViolated("ubiquity violated", var="x")
    monkeypatch.setattr(cli.Solver, "solve", boom)
    code, _, err = run(capsys, "solve", "--instance", neq)
    assert code == 4 and err.strip() == "internal diagnostic: ubiquity violated var=x"
