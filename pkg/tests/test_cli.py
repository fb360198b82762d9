import io
import json

from concatlogic.cli import run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue().strip(), err.getvalue()


def test_classify():
    assert call("classify", 'E x . x = "0"')[:2] == (0, "(1,0,0)")
    assert call("classify", 'e = e -> e = e')[:2] == (0, "not-sigma")
    code, out, _ = call("classify", "--json", 'E x . x = "0"')
    assert json.loads(out) == {"sigma": True, "n": 1, "m": 0, "k": 0}


def test_eval_reports_witness():
    code, out, _ = call("eval", "--structure", "D", "--budget", "4", 'E x . x * "0" = "10"')
    assert code == 0 and out == 'true, witness x="1"'
    code, out, _ = call("--json", "eval", "--structure", "D", "--budget", "4",
                        'E x . x * "0" = "1"')
    assert json.loads(out)["value"] == "unknown"


def test_parse_outputs_ast_json():
    code, out, _ = call("parse", 'x = e')
    assert json.loads(out)["kind"] == "eq"


def test_normalize_and_solve_eq():
    code, out, _ = call("--json", "normalize", "--structure", "B", 'E x . E y . x * y = "01"')
    data = json.loads(out)
    assert code == 0 and data["shape"] == [1, 2, 0] and data["problems"] == []
    assert call("solve-eq", "--max-len", "4", 'x * "0" = "10"')[1] == 'sat x="1"'
    assert call("solve-eq", 'x * "0" = x * "1"')[1] == "unsat"


def test_decide_names_its_route():
    code, out, _ = call("--json", "decide", "--structure", "D", 'E x . x * "0" = "10"')
    assert json.loads(out)["route"] == "word-equations"
    code, out, _ = call("--json", "decide", 'A x <: "00" . x <: "000"')
    data = json.loads(out)
    assert data["route"] == "finite-evaluation" and data["value"] == "true"
    code, out, _ = call("--json", "decide", 'E x . A y <: x . y = y')
    assert json.loads(out)["route"] == "budgeted-evaluation"


def test_prove_and_check(tmp_path):
    proof = tmp_path / "p.json"
    code, out, _ = call("prove", "--theory", "B", "-o", str(proof), 'A x <: "01" . x <: "01"')
    assert code == 0 and proof.exists()
    assert call("check", "--theory", "B", str(proof))[0] == 0
    data = json.loads(proof.read_text())
    data["steps"][0]["formula"] = data["steps"][0]["formula"].replace("0", "1")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    code, out, _ = call("--json", "check", "--theory", "B", str(bad))
    assert code == 1 and json.loads(out)["step"] == 1
    assert call("check", "--theory", "D", str(proof))[0] == 1


def test_refused_proof_exits_one():
    code, out, _ = call("prove", '"0" = "1"')
    assert code == 1 and out.startswith("refused: false")


def test_usage_errors_exit_two():
    assert call("eval")[0] == 2
    assert call("frobnicate")[0] == 2
    assert call("eval", "E x . x *")[0] == 2
    assert call("eval", "x = e")[0] == 2


def test_pcp_commands(tmp_path):
    inst = tmp_path / "i.txt"
    inst.write_text("1 101\n10 00\n011 11\n")
    code, out, _ = call("pcp", "solve", "--bound", "8", str(inst))
    assert code == 0 and out == "1 3 2 3"
    assert call("pcp", "verify", str(inst), "1", "3", "2", "3")[:2] == (0, "valid")
    assert call("pcp", "verify", str(inst), "1")[:2] == (1, "invalid")
    code, out, _ = call("--json", "pcp", "reduce", "--target", "d411", str(inst))
    assert json.loads(out)["class"] == [4, 1, 1]
    single = tmp_path / "s.txt"
    single.write_text("0 0\n")
    code, out, _ = call("--json", "pcp", "crosscheck", "--budget", "8", str(single))
    assert code == 0 and json.loads(out)["agree"] is True


def test_output_is_deterministic():
    argv = ("--json", "eval", "--structure", "B", 'E x . x * x = "0101"')
    assert call(*argv) == call(*argv)
