import json
import math

import pytest

from jacobi_lab import __version__
from jacobi_lab.cli import main

TOP_KEYS = {"invocation", "surface", "params", "resolution", "results", "seed", "version"}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _finite(obj):
    if isinstance(obj, dict):
        return all(_finite(v) for v in obj.values())
    if isinstance(obj, list):
        return all(_finite(v) for v in obj)
    return not isinstance(obj, float) or math.isfinite(obj)


def test_spectrum_clifford(capsys):
    code, out, _ = run(capsys, "spectrum", "--surface", "clifford", "--operator", "jacobi", "--res", "128", "--k", "6")
    assert code == 0
    doc = json.loads(out)
    assert TOP_KEYS <= set(doc) and "timestamp" in doc
    assert doc["version"] == __version__
    assert doc["invocation"].startswith("jacobi-lab spectrum")
    expected = [-4, -2, -2, -2, -2, 0]
    assert all(abs(a - b) < 0.02 for a, b in zip(doc["results"]["eigenvalues"], expected))
    assert _finite(doc)


def test_verify_section5(capsys):
    code, out, _ = run(capsys, "verify", "--theorem", "section5", "--r", "0.6", "--t", "0.48", "--h", "0.64",
                       "--res", "128", "--no-timestamp")
    doc = json.loads(out)
    assert code == 0 and doc["verdict"] == "pass"
    assert "margin" in doc["results"] and "lambda" in doc["results"]


def test_verification_failure_exit_code(capsys):
    code, out, _ = run(capsys, "verify", "--theorem", "section5", "--r", "0.6", "--t", "0.48", "--h", "0.64",
                       "--res", "8", "--no-timestamp")
    assert code == 1 and json.loads(out)["verdict"] == "fail"


def test_balance_constant(capsys):
    code, out, _ = run(capsys, "balance", "--surface", "clifford", "--weights", "constant", "--res", "64")
    doc = json.loads(out)
    assert code == 0
    assert max(abs(c) for c in doc["results"]["y"]) < 1e-8
    assert doc["results"]["residual"] <= 1e-8


def test_willmore_and_conformal_area(capsys):
    code, out, _ = run(capsys, "willmore", "--surface", "equilateral", "--res", "64")
    assert code == 0
    assert abs(json.loads(out)["results"]["willmore"] - 4 * math.pi**2 / math.sqrt(3)) < 1e-3
    code, out, _ = run(capsys, "conformal-area", "--surface", "clifford", "--y", "0.3", "0", "0", "0", "--res", "64")
    res = json.loads(out)["results"]
    assert code == 0 and res["conformal_area"] < res["willmore"]


def test_prop22_and_theorem2(capsys):
    code, out, _ = run(capsys, "verify", "--theorem", "prop22", "--r", "0.75", "--samples", "100")
    assert code == 0 and json.loads(out)["verdict"] == "pass"
    code, out, _ = run(capsys, "verify", "--theorem", "theorem2", "--r", "0.4", "--t", "0.5",
                       "--h", str(math.sqrt(0.59)), "--res", "32")
    doc = json.loads(out)
    assert doc["results"]["details"]["hypothesis_r_ge_s"] is False


def test_csv(capsys, tmp_path):
    path = tmp_path / "eig.csv"
    code, _, _ = run(capsys, "spectrum", "--surface", "lawson31", "--res", "32", "--k", "4", "--format", "csv",
                     "--out", str(path))
    lines = path.read_text().splitlines()
    assert code == 0 and lines[0] == "index,eigenvalue,residual" and len(lines) == 5
    code, _, err = run(capsys, "willmore", "--surface", "clifford", "--res", "16", "--format", "csv")
    assert code == 2 and json.loads(err)["error"] == "usage"


def test_export_mesh(capsys, tmp_path):
    path = tmp_path / "m.off"
    code, _, _ = run(capsys, "willmore", "--surface", "clifford", "--res", "8", "--export-mesh", str(path))
    assert code == 0 and path.read_text().startswith("4OFF\n64 128 192\n")


@pytest.mark.parametrize("argv", [
    ["spectrum", "--surface", "torus"],
    ["spectrum", "--surface", "clifford", "--res", "4"],
    ["spectrum", "--surface", "clifford", "--res", "2000"],
    ["spectrum", "--surface", "clifford", "--res", "8", "8", "8"],
    ["spectrum"],
    ["verify", "--theorem", "section5", "--r", "0.6"],
    ["verify", "--theorem", "section5", "--r", "0.6", "--t", "0.5", "--h", "0.5", "--res", "16"],
    ["conformal-area", "--surface", "clifford", "--y", "0.9", "0.9", "0", "0"],
    ["conformal-area", "--surface", "clifford", "--y", "0.1"],
    ["frobnicate"],
])
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""
    doc = json.loads(err)
    assert set(doc) == {"error", "detail"}


def test_nonconvergence_exit_code(capsys):
    code, out, err = run(capsys, "spectrum", "--surface", "clifford", "--res", "16", "--tol", "1e-30")
    assert code == 3 and out == ""
    assert json.loads(err)["error"] == "ConvergenceError"


def test_byte_identical_output(tmp_path, capsys):
    path = tmp_path / "run.json"
    runs = []
    for _ in range(2):
        assert main(["spectrum", "--surface", "lawson31", "--res", "48", "--seed", "11", "--no-timestamp",
                     "--out", str(path)]) == 0
        runs.append(path.read_bytes())
    assert runs[0] == runs[1]
