import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from psvd import read_matrix_market, write_matrix_market
from psvd.bench import gaussian_matrix, run_bench_reorth, run_bench_warmstart
from psvd.cli import main
from psvd.report import SCHEMA_ID, RunReport, load_schema, strip_timing


@pytest.fixture
def mtx(tmp_path):
    p = tmp_path / "A.mtx"
    write_matrix_market(p, gaussian_matrix(25, 18, 1))
    return p


@pytest.fixture
def rpca_mtx(tmp_path):
    rng = np.random.default_rng(0)
    D = rng.standard_normal((30, 2)) @ rng.standard_normal((2, 30))
    D[rng.random((30, 30)) < 0.05] += 5.0
    p = tmp_path / "D.mtx"
    write_matrix_market(p, D)
    return p


def run(argv, tmp_path, name="r.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_topk(mtx, tmp_path, capsys):
    code, rep = run(["topk", "--input", str(mtx), "--k", "3"], tmp_path)
    assert code == 0
    jsonschema.validate(rep, load_schema())
    assert rep["schema"] == SCHEMA_ID and rep["command"] == "topk"
    ref = np.linalg.svd(read_matrix_market(mtx), compute_uv=False)
    np.testing.assert_allclose(rep["singular_values"], ref[:3], rtol=1e-10)
    assert "sigma" in capsys.readouterr().out


def test_threshold(mtx, tmp_path):
    code, rep = run(["threshold", "--input", str(mtx), "--thr", "5", "--k0", "4"], tmp_path)
    assert code == 0
    ref = np.linalg.svd(read_matrix_market(mtx), compute_uv=False)
    np.testing.assert_allclose(rep["singular_values"], ref[ref > 5], rtol=1e-10)
    assert rep["extra"]["subspace_sizes"][0] == 4
    assert rep["flags"] == {"truncated": False, "unconverged": False}


def test_no_json_without_out(mtx, tmp_path, capsys):
    assert main(["topk", "--input", str(mtx), "--k", "2"]) == 0
    out = capsys.readouterr().out
    assert not out.lstrip().startswith("{")
    assert list(tmp_path.glob("*.json")) == []


@pytest.mark.parametrize("backend", ["threshold", "blws"])
def test_rpca_writes_parts(rpca_mtx, tmp_path, backend):
    L, S = tmp_path / "L.mtx", tmp_path / "S.mtx"
    code, rep = run(["rpca", "--input", str(rpca_mtx), "--backend", backend,
                     "--out-lowrank", str(L), "--out-sparse", str(S)], tmp_path)
    assert code == 0
    jsonschema.validate(rep, load_schema())
    D = read_matrix_market(rpca_mtx)
    np.testing.assert_allclose(read_matrix_market(L) + read_matrix_market(S), D,
                               atol=1e-6 * np.linalg.norm(D))
    assert rep["extra"]["rank"] == 2 and len(rep["singular_values"]) == 2


def test_rpca_fixed_lambda(rpca_mtx, tmp_path):
    code, rep = run(["rpca", "--input", str(rpca_mtx), "--lambda", "0.2"], tmp_path)
    assert code == 0 and rep["extra"]["lam"] == 0.2


def test_bench_reports(tmp_path):
    code, rep = run(["bench", "reorth", "--m", "50", "--n", "50", "--K", "10"], tmp_path)
    assert code == 0
    jsonschema.validate(rep, load_schema())
    assert [r["inputs"]["mode"] for r in rep["runs"]] == ["fused-block", "vector-loop"]
    assert rep["timing"]["speedup_ratio"] > 0
    code, rep = run(["bench", "warmstart", "--m", "40", "--n", "30", "--k", "2", "--T", "3"],
                    tmp_path, "w.json")
    assert code == 0
    jsonschema.validate(rep, load_schema())
    assert rep["matvecs"] == rep["extra"]["warm_matvecs"] + rep["extra"]["cold_matvecs"]


@pytest.mark.parametrize("argv", [
    ["topk", "--k", "3"],
    ["threshold", "--thr", "4", "--seed", "11"],
    ["rpca", "--backend", "blws"],
    ["bench", "warmstart", "--m", "30", "--n", "20", "--k", "2", "--T", "3"],
    ["bench", "reorth", "--m", "40", "--n", "30", "--K", "12"],
])
def test_repeated_runs_identical(argv, mtx, rpca_mtx, tmp_path):
    if argv[0] in ("topk", "threshold"):
        argv = [*argv, "--input", str(mtx)]
    elif argv[0] == "rpca":
        argv = [*argv, "--input", str(rpca_mtx)]
    _, a = run(argv, tmp_path, "a.json")
    _, b = run(argv, tmp_path, "b.json")
    assert strip_timing(a) == strip_timing(b)


def test_seed_env_and_flag(mtx, tmp_path, monkeypatch):
    monkeypatch.setenv("PSVD_SEED", "17")
    _, rep = run(["topk", "--input", str(mtx), "--k", "2"], tmp_path)
    assert rep["inputs"]["seed"] == 17
    _, rep = run(["topk", "--input", str(mtx), "--k", "2", "--seed", "3"], tmp_path)
    assert rep["inputs"]["seed"] == 3
    monkeypatch.setenv("PSVD_SEED", "abc")
    assert main(["topk", "--input", str(mtx), "--k", "2"]) == 2


def test_exit_codes(mtx, rpca_mtx, tmp_path):
    assert main(["topk", "--input", str(mtx), "--k", "100"]) == 2
    assert main(["threshold", "--input", str(mtx), "--thr", "-1"]) == 2
    bad = tmp_path / "bad.mtx"
    bad.write_text("%%MatrixMarket matrix array complex general\n1 1\n1 0\n")
    assert main(["topk", "--input", str(bad), "--k", "1"]) == 3
    assert main(["topk", "--input", str(tmp_path / "missing.mtx"), "--k", "1"]) == 3
    assert main(["rpca", "--input", str(rpca_mtx), "--max-iter", "2"]) == 0
    assert main(["rpca", "--input", str(rpca_mtx), "--max-iter", "2", "--strict"]) == 4
    with pytest.raises(SystemExit) as info:
        main(["topk", "--input", str(mtx)])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["rpca", "--input", str(mtx), "--lambda", "-3"])
    assert info.value.code == 2


def test_parse_error_message(tmp_path, capsys):
    bad = tmp_path / "bad.mtx"
    bad.write_text("%%MatrixMarket matrix coordinate real general\n2 2 1\n5 1 1.0\n")
    assert main(["topk", "--input", str(bad), "--k", "1"]) == 3
    assert "bad.mtx:3:" in capsys.readouterr().err


def test_module_entry_point(mtx):
    out = subprocess.run([sys.executable, "-m", "psvd", "topk", "--input", str(mtx), "--k", "1"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "sigma" in out.stdout


class TestBenchFunctions:
    def test_reorth_smoke_and_determinism(self):
        a1, l1 = run_bench_reorth(50, 50, 10, seed=3)
        a2, _ = run_bench_reorth(50, 50, 10, seed=3)
        assert a1.extra["alphas"] == a2.extra["alphas"] and a1.extra["betas"] == a2.extra["betas"]
        assert a1.extra["max_coef_diff"] <= 1e-13 * max(a1.extra["alphas"])
        assert a1.iterations == l1.iterations == 10
        jsonschema.validate(a1.to_dict(), load_schema())

    def test_reorth_rejects_large_K(self):
        with pytest.raises(ValueError):
            run_bench_reorth(10, 8, 9)

    def test_warmstart_single_step_equal(self):
        w, c = run_bench_warmstart(40, 30, 3, 1, 0.01, seed=0)
        assert w.matvecs == c.matvecs

    def test_warmstart_zero_drift_one_pass(self):
        w, c = run_bench_warmstart(60, 50, 3, 4, 0.0, seed=1)
        assert w.extra["passes_per_step"][1:] == [1, 1, 1]
        assert w.matvecs < c.matvecs

    def test_gaussian_matrix_frozen(self):
        np.testing.assert_array_equal(gaussian_matrix(2, 3, 0), [
            [0.1257302210933933, -0.1321048632913019, 0.6404226504432821],
            [0.10490011715303971, -0.535669373161111, 0.36159505490948474]])


def test_report_rejects_unsorted_values():
    with pytest.raises(ValueError):
        RunReport(command="x", inputs={}, singular_values=[1.0, 2.0])
    with pytest.raises(ValueError):
        RunReport(command="x", inputs={}, matvecs=-1)
