import json
from pathlib import Path

import pytest
import yaml
from hypothesis import HealthCheck, given, settings, strategies as st

from oddgeom.cli import InputError, main, parse_scenario, run

SCEN = Path(__file__).resolve().parent.parent / "scenarios"


def _run(*argv):
    return run([str(a) for a in argv])


def _json(*argv):
    code, out = _run(*argv, "--format", "json")
    return code, json.loads(out)


def _write(tmp_path, doc, name="s.yaml"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else yaml.safe_dump(doc))
    return p


def test_classify_expect_contact():
    code, rep = _json("classify", SCEN / "darboux_contact.yaml", "--expect", "contact")
    assert code == 0
    assert "contact" in rep["covariant"]["labels"]
    assert "Jacobi" in rep["contravariant"]["labels"]


def test_classify_expect_cosymplectic_mismatch():
    code, rep = _json("classify", SCEN / "darboux_contact.yaml", "--expect", "cosymplectic")
    assert code == 2
    assert rep["covariant"]["residuals"]["d_omega"] > 0.1
    assert rep["expect"]["missing"] == ["cosymplectic"]


def test_classify_darboux_cosymplectic_and_acc():
    code, rep = _json("classify", SCEN / "darboux_cosymplectic.yaml", "--expect", "cosymplectic",
                      "--expect", "coPoisson")
    assert code == 0
    code, rep = _json("classify", SCEN / "darboux_acc.yaml", "--expect", "almost-coPoisson-Jacobi")
    assert code == 0
    assert rep["contravariant"]["rank"]["s"] == 1


def test_malformed_expression_exit_1(tmp_path):
    p = _write(tmp_path, {"version": 1, "darboux": {"n": 1, "omega_funcs": ["x1 +", "0"]}})
    code, rep = _json("classify", p)
    assert code == 1
    assert "offset 4" in rep["error"]["message"]


@pytest.mark.parametrize("doc", [
    "version: 1\n",
    "version: 2\ndarboux: {n: 1, omega_funcs: ['0', '0']}\n",
    "version: 1\ndarboux: {n: 1, omega_funcs: ['0']}\n",
    "version: 1\ndarboux: {n: 0, omega_funcs: []}\n",
    "version: 1\ndarboux: {n: 1, s: 2, omega_funcs: ['0', '0']}\n",
    "version: 1\nchart: [t, x1, x2]\ncovariant: {omega: ['1', '0', 'y'], Omega: [['0','0','0'],['0','0','1'],['0','0','0']]}\n",
    "version: 1\nchart: [t, x1, x2]\ncovariant: {omega: ['1', '0'], Omega: [['0','0','0'],['0','0','1'],['0','0','0']]}\n",
    "[1, 2\n",
    "- just\n- a list\n",
])
def test_bad_inputs_exit_1(tmp_path, doc):
    code, rep = _json("classify", _write(tmp_path, doc))
    assert code == 1
    assert rep["error"]["message"]


def test_missing_file_exit_1(tmp_path):
    code, _ = _run("classify", tmp_path / "nope.yaml")
    assert code == 1


def test_degenerate_pair_exit_1(tmp_path):
    doc = {"version": 1, "chart": ["t", "x1", "x2"],
           "covariant": {"omega": ["0", "1", "0"], "Omega": [["0", "0", "0"], ["0", "0", "1"], ["0", "0", "0"]]}}
    code, rep = _json("classify", _write(tmp_path, doc))
    assert code == 1 and rep["error"]["type"] == "PairInvariantError"


def test_domain_error_reports_point(tmp_path):
    doc = {"version": 1, "chart": ["t", "x1", "x2"], "domain": [[0, 0], [0, 0], [0, 0]],
           "covariant": {"omega": ["1", "1/x1", "0"], "Omega": [["0", "0", "0"], ["0", "0", "1"], ["0", "0", "0"]]}}
    code, rep = _json("classify", _write(tmp_path, doc), "--samples", "2")
    assert code == 1
    assert rep["error"]["point"] == {"t": 0.0, "x1": 0.0, "x2": 0.0}


def test_bad_flags_exit_1():
    assert _run("classify", SCEN / "darboux_contact.yaml", "--samples", "0")[0] == 1
    assert _run("frobnicate")[0] == 1


def test_dualize():
    code, rep = _json("dualize", SCEN / "covariant_contact.yaml", "--roundtrip")
    assert code == 0
    assert rep["roundtrip_residual"] <= 1e-8
    assert rep["direction"] == "covariant->contravariant"
    assert max(rep["axioms"].values()) <= 1e-12
    assert all(row == [1.0, 0.0, 0.0] for row in rep["dual"]["E"])
    code, rep = _json("dualize", SCEN / "copoisson_flat.yaml", "--roundtrip")
    assert code == 0 and rep["roundtrip_residual"] <= 1e-8
    assert all(row == [1.0, 0.0, 0.0] for row in rep["dual"]["omega"])


def test_dualize_non_regular_exit_1():
    code, rep = _json("dualize", SCEN / "darboux_acc.yaml", "--start", "contravariant")
    assert code == 1 and rep["error"]["type"] == "NonRegularError"


def test_bracket_copoisson():
    code, rep = _json("bracket", SCEN / "copoisson_flat.yaml", "--f", "t", "--g", "x1", "--jacobi")
    assert code == 0
    assert rep["bracket"]["expression"] == "x1"
    code, rep = _json("bracket", SCEN / "copoisson_flat.yaml", "--f", "t", "--g", "x1", "--h", "x2",
                      "--jacobi")
    assert rep["jacobiator"]["max_abs"] == pytest.approx(1.0)
    code, rep = _json("bracket", SCEN / "copoisson_flat.yaml", "--f", "x1*t", "--g", "x1*t")
    assert rep["bracket"]["expression"] == "0" and rep["bracket"]["values"] == [0.0] * 3


def test_bracket_jacobi_scenario():
    code, rep = _json("bracket", SCEN / "darboux_contact.yaml", "--f", "t*x1", "--g", "x2^2",
                      "--h", "x1 + t", "--jacobi", "--omega-identity")
    assert code == 0
    assert rep["jacobiator"]["max_abs"] <= 1e-9
    assert rep["omega_identity_residual"] <= 1e-9


def test_scenario_commands():
    code, rep = _json("scenario", "galilei", "--metric", "flat")
    assert code == 0 and rep["theorems"]["passed"]
    code, rep = _json("scenario", "einstein", "--metric", "flat", "--expect", "contact",
                      "--expect", "Jacobi")
    assert code == 0
    code, _ = _json("scenario", "galilei", "--metric", SCEN / "galilei_uniform_force.yaml")
    assert code == 0
    code, _ = _json("scenario", "einstein", "--metric", SCEN / "einstein_rindler.yaml",
                    "--expect", "Jacobi")
    assert code == 0


def test_scenario_wrong_signature_exit_1():
    code, rep = _json("scenario", "einstein", "--metric", SCEN / "einstein_euclidean.yaml")
    assert code == 1
    assert rep["error"]["type"] == "MetricError"
    assert "signature" in rep["error"]["message"]


def test_scenario_kind_mismatch_exit_1():
    code, _ = _json("scenario", "galilei", "--metric", SCEN / "einstein_rindler.yaml")
    assert code == 1


def test_determinism_byte_identical(tmp_path):
    for argv in (["classify", SCEN / "darboux_acc.yaml"],
                 ["scenario", "einstein", "--metric", SCEN / "einstein_rindler.yaml"]):
        a = _run(*argv, "--format", "structured", "--seed", "5")
        b = _run(*argv, "--format", "structured", "--seed", "5")
        assert a == b
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    _run("classify", SCEN / "darboux_contact.yaml", "--output", out1, "--format", "json")
    _run("classify", SCEN / "darboux_contact.yaml", "--output", out2, "--format", "json")
    assert out1.read_bytes() == out2.read_bytes()


def test_text_and_json_carry_the_same_numbers():
    _, text = _run("classify", SCEN / "darboux_acc.yaml")
    _, js = _json("classify", SCEN / "darboux_acc.yaml")
    for k, v in js["covariant"]["residuals"].items():
        assert f"{k}: {v!r}" in text


def test_main_writes_errors_to_stderr(capsys, tmp_path):
    p = _write(tmp_path, "version: 1\n")
    assert main(["classify", str(p)]) == 1
    cap = capsys.readouterr()
    assert cap.out == "" and "error" in cap.err


def test_parse_scenario_in_memory():
    sc = parse_scenario({"version": 1, "darboux": {"n": 1, "omega_funcs": ["0", "0"]}})
    assert sc.kind == "darboux" and sc.chart.coords == ("t", "x1", "x2")
    with pytest.raises(InputError):
        parse_scenario({"version": 1, "darboux": {}, "galilei": {}})


_garbage = st.text(alphabet="x12t+-*/^() .sqrt", min_size=0, max_size=12)


@settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(_garbage, _garbage)
def test_exit_code_contract(tmp_path, a, b):
    p = _write(tmp_path, {"version": 1, "darboux": {"n": 1, "omega_funcs": [a, b]}}, "g.yaml")
    code, out = _run("classify", p, "--format", "json", "--samples", "8")
    assert code in (0, 1, 2)
    rep = json.loads(out)
    assert rep["exit_code"] == code
    assert ("error" in rep) == (code == 1)
