import json

import numpy as np
import pytest
from gmpy2 import mpq

from triconj.cli import EXIT_CONDITION, EXIT_INPUT, EXIT_OK, run
from triconj.conjugacy import GermSequence, switching_sequence
from triconj.instances import diagonal_decay, random_germ_rule, random_special
from triconj.jets import HomogeneousMap

DIAG = [mpq(1, 2), mpq(1, 4)]


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def load(path):
    return json.loads(path.read_text())


@pytest.fixture
def germ_file(tmp_path):
    f = GermSequence(random_germ_rule(2, 3, np.random.default_rng(0), diag=DIAG), diagonal_decay(DIAG))
    return write(tmp_path / "f.json", f.to_json())


def test_conjugate(tmp_path, germ_file):
    out = tmp_path / "out"
    assert run(["conjugate", germ_file, "--K", "3", "--horizon", "10", "--out-dir", str(out)]) == EXIT_OK
    pair = load(out / "conjugacy.json")
    assert pair["m0"] == 2
    assert all(r["residual"] == "0" for r in pair["residuals"])
    manifest = load(out / "manifest.json")
    assert manifest["status"] == 0 and manifest["command"] == "conjugate"
    assert set(manifest["outputs"]) == {"conjugacy.json", "residuals.csv"}
    assert manifest["config"]["K"] == 3


def test_conjugate_ord_violation(tmp_path):
    path = write(tmp_path / "s.json", switching_sequence((1, 3, 9, 27)).to_json())
    out = tmp_path / "out"
    assert run(["conjugate", path, "--K", "2", "--out-dir", str(out)]) == EXIT_CONDITION
    err = load(out / "error.json")
    assert err["condition"] == "ord-violation"
    assert {"n", "l", "lhs"} <= set(err) and err["lhs"] == "1"
    assert load(out / "manifest.json")["status"] == EXIT_CONDITION


def test_conjugate_missing_input(tmp_path):
    assert run(["conjugate", str(tmp_path / "nope.json"), "--out-dir", str(tmp_path)]) == EXIT_INPUT
    assert load(tmp_path / "error.json")["condition"] == "input"


def test_ord_check(tmp_path, germ_file):
    assert run(["ord-check", germ_file, "--out-dir", str(tmp_path)]) == EXIT_OK
    assert load(tmp_path / "ord.json")["verdict"] == "consistent"


def test_control_solve(tmp_path):
    obj = {"A": [[[2, 0], [0, "1/2"]]], "b": [[1, 1]], "V": [2]}
    path = write(tmp_path / "c.json", obj)
    assert run(["control-solve", path, "--horizon", "4", "--out-dir", str(tmp_path)]) == EXIT_OK
    sol = load(tmp_path / "solution.json")
    assert sol["u"][0] == [["-1", "0"], ["0", "0"]]
    assert sol["v"][0] == [["0", "0"], ["-1", "0"]]
    lines = (tmp_path / "solution.csv").read_text().splitlines()
    assert lines[0] == "n,u1,u2,tail_bound" and len(lines) == 6


def test_norm_bound_both_inputs(tmp_path):
    p = HomogeneousMap.monomial((1, 1), 0, mpq(1))
    assert run(["norm-bound", write(tmp_path / "p.json", p.to_json()), "--out-dir", str(tmp_path)]) == EXIT_OK
    s = load(tmp_path / "norms.json")
    assert s["coeff_max"] == 1 and s["upper_bound"] == 3
    q = write(tmp_path / "q.json", {"L": [[["1/2", 0], ["1/3", "1/4"]]] * 3, "k": 2})
    assert run(["norm-bound", q, "--out-dir", str(tmp_path)]) == EXIT_OK
    assert load(tmp_path / "quoz.json")["holds"]


def test_svil_check(tmp_path):
    assert run(["svil-check", "--count", "10", "--out-dir", str(tmp_path)]) == EXIT_OK
    assert len((tmp_path / "svil.csv").read_text().splitlines()) == 11


def test_spectral(tmp_path):
    assert run(["spectral", "--lam", "0.5", "--k", "2", "--out-dir", str(tmp_path)]) == EXIT_OK
    res = load(tmp_path / "spectral.json")
    assert res["holds"] and abs(res["rho_estimate"] - 0.25) < 1e-10


def test_triangularize(tmp_path):
    assert run(["triangularize", "--horizon", "10", "--random-u0", "--out-dir", str(tmp_path)]) == EXIT_OK
    assert load(tmp_path / "triangularize.json")["unitarity_defect"] < 1e-12
    assert (tmp_path / "diagonals.csv").read_text().splitlines()[0] == "n,abs_l1,abs_l2,abs_l3"


def test_basin_sample(tmp_path):
    g = random_special(2, np.random.default_rng(0))
    path = write(tmp_path / "g.json", [g.to_json()])
    assert run(["basin-sample", path, "--points", "20", "--out-dir", str(tmp_path)]) == EXIT_OK
    rows = (tmp_path / "basin.csv").read_text().splitlines()
    assert len(rows) == 21 and rows[0].endswith("steps,final_norm")


def test_counterexample(tmp_path):
    assert run(["counterexample", "--schedule", "1,3,9,27", "--out-dir", str(tmp_path)]) == EXIT_OK
    res = load(tmp_path / "counterexample.json")
    assert res["verdict"] == "not-subexponential" and res["growth_ok"]
    header = (tmp_path / "coefficients.csv").read_text().splitlines()[0]
    assert header.count("abs_u") == 20


def test_remark12(tmp_path):
    assert run(["remark12", "--out-dir", str(tmp_path)]) == EXIT_OK
    res = load(tmp_path / "remark12.json")
    assert res["halving_ok"] and res["doubling_ok"] and res["bound_ok"]


@pytest.mark.parametrize("argv", [
    ["counterexample", "--schedule", "1,3,9,27"],
    ["svil-check", "--count", "5", "--seed", "3"],
    ["remark12"],
])
def test_deterministic_outputs(tmp_path, argv):
    out = tmp_path / "out"
    assert run(argv + ["--out-dir", str(out)]) == EXIT_OK
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert run(argv + ["--out-dir", str(out)]) == EXIT_OK
    second = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first == second


def test_deterministic_conjugate(tmp_path, germ_file):
    out = tmp_path / "out"
    argv = ["conjugate", germ_file, "--K", "3", "--horizon", "8", "--out-dir", str(out)]
    run(argv)
    first = (out / "conjugacy.json").read_bytes()
    run(argv)
    assert (out / "conjugacy.json").read_bytes() == first


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("TRICONJ_THREADS", "3")
    assert run(["svil-check", "--count", "6", "--out-dir", str(tmp_path)]) == EXIT_OK
    assert load(tmp_path / "manifest.json")["config"]["threads"] == 3
