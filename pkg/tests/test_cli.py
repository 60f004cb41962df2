import json
import os
import subprocess
import sys

import numpy as np
import pytest

from qmetro.cli import main
from qmetro.io import dumps, encode_complex, model_to_dict

from _gen import random_model


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def fixtures(tmp_path, capsys):
    code, _, _ = run(["example", "two-qubit", "--q", "0.3", "--theta", str(np.pi / 3), "-o", str(tmp_path)], capsys)
    assert code == 0
    return tmp_path / "two_qubit_model.json", tmp_path / "two_qubit_povm.json"


def test_example_defaults(tmp_path, capsys):
    code, out, _ = run(["example", "two-qubit", "-o", str(tmp_path)], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["q"] == 0.5 and rep["theta"] == pytest.approx(np.pi / 2)
    assert rep["certificate"]["verdict"] == "Saturating"


def test_example_unknown_name(capsys):
    code, _, err = run(["example", "three-qubit"], capsys)
    assert code == 2 and "unknown example" in err


def test_example_files_reproducible(tmp_path, capsys):
    for sub in ("a", "b"):
        run(["example", "two-qubit", "--q", "0.3", "--theta", "1.0", "-o", str(tmp_path / sub)], capsys)
    for name in ("two_qubit_model.json", "two_qubit_povm.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_analyze_two_qubit(fixtures, capsys):
    code, out, _ = run(["analyze", str(fixtures[0])], capsys)
    rep = json.loads(out)
    assert code == 0
    assert rep["pcc"]["holds"] is True
    f = 4 * 0.3 + 4 * 0.7 * np.sin(np.pi / 3) ** 2
    np.testing.assert_allclose(rep["qfim"], np.diag([4.0, f]), atol=1e-9)
    assert rep["model"] == {"d": 8, "s": 2, "r": 2, "degenerate_spectrum": False}
    assert rep["tolerances"]["tol_sat"] == 1e-9


def test_analyze_zero_and_pcc_violating(tmp_path, capsys):
    zero = {"rho": encode_complex(np.diag([0.6, 0.4])), "drho": [encode_complex(np.zeros((2, 2)))]}
    (tmp_path / "zero.json").write_text(json.dumps(zero))
    code, out, _ = run(["analyze", str(tmp_path / "zero.json")], capsys)
    rep = json.loads(out)
    assert code == 0 and np.allclose(rep["qfim"], 0) and any("trivially" in n for n in rep["notes"])
    bad = model_to_dict(random_model(np.random.default_rng(0), 2, 2))
    (tmp_path / "bad.json").write_text(dumps(bad))
    code, out, _ = run(["analyze", str(tmp_path / "bad.json")], capsys)
    rep = json.loads(out)
    assert rep["pcc"]["holds"] is False
    assert any("necessary condition" in n for n in rep["notes"])


def test_construct_verify_round_trip(fixtures, tmp_path, capsys):
    report = tmp_path / "c.json"
    code, _, _ = run(["construct", str(fixtures[0]), "--seed", "4", "-o", str(report)], capsys)
    assert code == 0
    c = json.loads(report.read_text())["construction"]
    assert c["feasible"] and c["method"] == "Projective-Iterative"
    code, out, _ = run(["verify", str(fixtures[0]), str(report)], capsys)
    v = json.loads(out)
    assert code == 0 and v["certificate"]["verdict"] == c["certificate"]["verdict"]
    np.testing.assert_allclose(v["certificate"]["outcome_residuals"], c["certificate"]["outcome_residuals"], atol=1e-12)


def test_verify_explicit_povm_and_computational_basis(fixtures, tmp_path, capsys):
    code, out, _ = run(["verify", str(fixtures[0]), str(fixtures[1])], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["certificate"]["verdict"] == "Saturating" and rep["max_gap"] < 1e-9
    comp = {"vectors": [encode_complex(e) for e in np.eye(8)]}
    (tmp_path / "comp.json").write_text(json.dumps(comp))
    code, out, _ = run(["verify", str(fixtures[0]), str(tmp_path / "comp.json")], capsys)
    rep = json.loads(out)
    assert rep["certificate"]["verdict"] == "NotSaturating"
    assert len(rep["outcomes"]) == 8


def test_verify_incomplete_povm(fixtures, tmp_path, capsys):
    part = {"vectors": [encode_complex(e) for e in np.eye(8)[:5]]}
    (tmp_path / "part.json").write_text(json.dumps(part))
    code, _, _ = run(["verify", str(fixtures[0]), str(tmp_path / "part.json")], capsys)
    assert code == 5


def test_construct_dimension_bound_exit(tmp_path, capsys):
    (tmp_path / "m.json").write_text(dumps(model_to_dict(random_model(np.random.default_rng(1), 3, 2))))
    code, out, _ = run(["construct", str(tmp_path / "m.json")], capsys)
    assert code == 4
    assert json.loads(out)["construction"]["reason"] == "NotSaturable-DimensionBound"
    code, _, _ = run(["construct", str(tmp_path / "m.json"), "--allow-incomplete"], capsys)
    assert code == 0


def test_schema_and_numeric_exit_codes(tmp_path, capsys):
    (tmp_path / "bad.json").write_text("{not json")
    assert run(["analyze", str(tmp_path / "bad.json")], capsys)[0] == 2
    (tmp_path / "neg.json").write_text(json.dumps({"rho": [[1.2, 0], [0, -0.2]], "drho": [[[0, 0.1], [0.1, 0]]]}))
    assert run(["analyze", str(tmp_path / "neg.json")], capsys)[0] == 3
    assert run(["analyze", str(tmp_path / "missing.json")], capsys)[0] == 2
    assert run(["bogus"], capsys)[0] == 2


def test_tolerance_flags_and_embedded_config(fixtures, tmp_path, capsys):
    first = tmp_path / "r1.json"
    run(["construct", str(fixtures[0]), "--tol-sat", "1e-8", "--seed", "2", "-o", str(first)], capsys)
    rep = json.loads(first.read_text())
    assert rep["tolerances"]["tol_sat"] == 1e-8 and rep["seed"] == 2
    second = tmp_path / "r2.json"
    run(["construct", str(fixtures[0]), "--tolerances", str(first), "--seed", str(rep["seed"]), "-o", str(second)], capsys)
    assert first.read_bytes() == second.read_bytes()


def test_module_entry_point(fixtures):
    env = dict(os.environ, QMETRO_THREADS="2")
    out = subprocess.run([sys.executable, "-m", "qmetro", "analyze", str(fixtures[0]), "--quiet", "-o", os.devnull],
                         capture_output=True, env=env)
    assert out.returncode == 0
