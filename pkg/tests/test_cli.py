import json
import os
import subprocess
import sys

import pytest

from nncert.cli import main

from conftest import problem_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write_problem(tmp_path, name="p", **d):
    base = {"dimension": 2, "objective": "x1^2 + x2^2", "box": {"lower": [-1, -1], "upper": [1, 1]}}
    base.update(d)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(base))
    return path


def test_check_kkt_pass(capsys):
    code, out, _ = run(capsys, "check-kkt", problem_path("disk_halfplane"), "--point", "1,0")
    assert code == 0
    assert json.loads(out)["lambda"] == [2.0]


def test_check_kkt_quartic(capsys):
    code, out, err = run(capsys, "check-kkt", problem_path("quartic"), "--point", "[0]")
    assert code == 3
    assert "second-order sufficiency" in json.loads(out)["failing"]


def test_check_kkt_parse_error(capsys, tmp_path):
    p = write_problem(tmp_path, objective="x1^2 +* x2")
    code, _, err = run(capsys, "check-kkt", p, "--point", "0,0")
    assert code == 64 and err.startswith("error:")


def test_missing_problem_file(capsys, tmp_path):
    code, _, _ = run(capsys, "zeros", tmp_path / "nope.json")
    assert code == 64


def test_bad_box(capsys, tmp_path):
    p = write_problem(tmp_path, box={"lower": [1, 1], "upper": [0, 0]})
    assert run(capsys, "zeros", p)[0] == 64


def test_check_kkt_infeasible(capsys):
    code, _, err = run(capsys, "check-kkt", problem_path("disk_halfplane"), "--point", "0,0")
    assert code == 65 and "infeasible" in err


def test_zeros(capsys):
    code, out, _ = run(capsys, "zeros", problem_path("double_well"))
    assert code == 0
    d = json.loads(out)
    assert d["points"] == [[-1.0, 0.0], [1.0, 0.0]]
    assert d["completeness"] == "heuristic"


def test_zeros_user_asserted(capsys):
    code, out, _ = run(capsys, "zeros", problem_path("disk_halfplane"), "--zeros", "[[1, 0]]")
    assert code == 0 and json.loads(out)["completeness"] == "user-asserted"


def test_certify_global_and_verify(capsys, tmp_path):
    cert = tmp_path / "c.json"
    code, out, _ = run(capsys, "certify-global", problem_path("disk_halfplane"), "--out", cert)
    assert code == 0 and cert.exists()
    assert json.loads(out)["verification"]["residual"]["max"] <= 1e-6
    code, out, _ = run(capsys, "verify", problem_path("disk_halfplane"), cert)
    assert code == 0 and json.loads(out)["passes"]


def test_verify_other_problem_is_residual_failure(capsys, tmp_path):
    cert = tmp_path / "c.json"
    assert run(capsys, "certify-global", problem_path("disk_halfplane"), "--out", cert)[0] == 0
    other = write_problem(tmp_path, objective="x1^2 + x2^2 - 1.5", inequalities=["x1 - 1"],
                          box={"lower": [-2, -2], "upper": [2, 2]})
    code, out, _ = run(capsys, "verify", other, cert, "--samples", "1000")
    assert code == 2 and "residual" in json.loads(out)["failures"]


@pytest.mark.parametrize("damage", ["truncate", "version", "garbage"])
def test_verify_corrupted_certificate(capsys, tmp_path, damage):
    cert = tmp_path / "c.json"
    assert run(capsys, "certify-global", problem_path("disk_halfplane"), "--out", cert)[0] == 0
    d = json.loads(cert.read_text())
    if damage == "truncate":
        d["nodes"] = d["nodes"][:5]
        cert.write_text(json.dumps(d))
    elif damage == "version":
        d["version"] = 2
        cert.write_text(json.dumps(d))
    else:
        cert.write_text("{]")
    code, _, err = run(capsys, "verify", problem_path("disk_halfplane"), cert)
    assert code == 66 and err.startswith("error:")


def test_verify_missing_certificate(capsys, tmp_path):
    assert run(capsys, "verify", problem_path("disk_halfplane"), tmp_path / "none.json")[0] == 66


@pytest.mark.parametrize("name,code", [("quartic", 3), ("zero_line", 5), ("parallel_gradients", 3),
                                       ("zero_multiplier", 3), ("negative", 3)])
def test_certify_global_refusals(capsys, tmp_path, name, code):
    cert = tmp_path / "c.json"
    got, _, err = run(capsys, "certify-global", problem_path(name), "--out", cert)
    assert got == code and err.startswith("error:")
    assert not cert.exists()


def test_certify_global_coverage_failure(capsys, tmp_path):
    # asserted zero list misses the second well
    cert = tmp_path / "c.json"
    code, _, err = run(capsys, "certify-global", problem_path("double_well"), "--zeros", "[[1, 0]]", "--out", cert)
    assert code == 4 and not cert.exists()


def test_certify_global_residual_failure(capsys, tmp_path):
    cert = tmp_path / "c.json"
    code, _, _ = run(capsys, "certify-global", problem_path("exp_sin"), "--tol-resid", "1e-30", "--out", cert)
    assert code == 2 and not cert.exists()


def test_certify_local(capsys, tmp_path):
    cert = tmp_path / "l.json"
    code, out, _ = run(capsys, "certify-local", problem_path("parabola_floor"), "--point", "0,0", "--out", cert)
    assert code == 0 and cert.exists()
    assert json.loads(out)["certificate"]["radius"] == 0.5
    assert run(capsys, "verify", problem_path("parabola_floor"), cert)[0] == 0


def test_certify_local_refusal(capsys, tmp_path):
    cert = tmp_path / "l.json"
    code, _, _ = run(capsys, "certify-local", problem_path("zero_multiplier"), "--point", "0,0", "--out", cert)
    assert code == 3 and not cert.exists()


def test_optimality_estimates_f_star(capsys):
    code, out, _ = run(capsys, "optimality", problem_path("shifted_bowl"))
    d = json.loads(out)
    assert code == 0 and d["passes"]
    assert d["f_star"] == pytest.approx(3.0, abs=1e-12)
    assert d["f_star_provenance"] == "multistart"


def test_optimality_user_f_star(capsys):
    code, out, _ = run(capsys, "optimality", problem_path("shifted_bowl"), "--f-star", "3", "--point", "0,0")
    assert code == 0 and json.loads(out)["f_star_provenance"] == "user"


def test_problem_options_are_used(capsys, tmp_path):
    p = write_problem(tmp_path, options={"zeros": [[0, 0]], "quad_order": 16, "budget": 8})
    code, out, _ = run(capsys, "zeros", p)
    assert code == 0 and json.loads(out)["completeness"] == "user-asserted"


def test_deterministic_outputs(capsys, tmp_path):
    outs = []
    for k in range(2):
        cert = tmp_path / f"c{k}.json"
        code, out, _ = run(capsys, "certify-global", problem_path("sin_halfplane"), "--out", cert, "--seed", "3")
        assert code == 0
        outs.append((out, cert.read_bytes()))
    assert outs[0] == outs[1]


def test_console_script_entry_point(tmp_path):
    env = dict(os.environ, NNCERT_LOG="INFO")
    res = subprocess.run([sys.executable, "-m", "nncert.cli", "check-kkt", problem_path("quartic"), "--point", "0"],
                         capture_output=True, text=True, env=env)
    assert res.returncode == 3
    assert json.loads(res.stdout)["passes"] is False
