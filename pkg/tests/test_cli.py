import json
import subprocess
import sys

import pytest

from cyclic_entropy.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, main

DISC_COARSE = {"kind": "disc", "radius": 0.9, "h": 1 / 32}


def run(tmp_path, command, cfg, out="out", extra=()):
    cfg_path = tmp_path / f"{command}.json"
    cfg_path.write_text(json.dumps(cfg))
    code = main([command, "--config", str(cfg_path), "--out", str(tmp_path / out), *extra])
    return code, tmp_path / out


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    base = tmp_path_factory.mktemp("solve")
    code, out = run(base, "solve", {"rank": 3, "q": {"zeros": [[0, 0, 1]]}, "grid": DISC_COARSE}, out="sol")
    assert code == EXIT_OK
    return out


class TestSpectrum:
    def test_converging_scan(self, tmp_path):
        code, out = run(tmp_path, "spectrum", {"betas": [1], "r_values": list(range(100, 5001, 100))})
        s = json.loads((out / "summary.json").read_text())
        assert code == EXIT_OK and abs(s["betas"]["1.0"]["final_gap"]) <= 0.01
        assert s["betas"]["1.0"]["gaps_monotone"]

    def test_divergent_scan(self, tmp_path):
        code, out = run(tmp_path, "spectrum", {"betas": [-1], "r_values": [16, 64]})
        s = json.loads((out / "summary.json").read_text())
        assert code == EXIT_OK and s["betas"]["-1.0"]["verdict"] == "diverges"

    def test_empty_r_list(self, tmp_path):
        assert run(tmp_path, "spectrum", {"betas": [1], "r_values": []})[0] == EXIT_USAGE

    def test_zero_beta_error_cell(self, tmp_path):
        code, out = run(tmp_path, "spectrum", {"betas": [0, 1], "r_values": [10]})
        assert code == EXIT_FAIL
        assert "beta must be non-zero" in (out / "spectrum.csv").read_text()


class TestSolve:
    def test_flat_instance(self, tmp_path):
        code, out = run(tmp_path, "solve", {"rank": 4, "q": {"zeros": []}, "grid": DISC_COARSE})
        assert code == EXIT_OK and (out / "metadata.json").is_file() and (out / "u_3.csv").is_file()

    def test_baseline_residual(self, solved):
        meta = json.loads((solved / "metadata.json").read_text())
        assert meta["converged"] and meta["residual"] <= 10 * 5.53e-13

    def test_bad_boundary_kind(self, tmp_path):
        cfg = {"rank": 3, "grid": DISC_COARSE, "boundary": "sideways"}
        assert run(tmp_path, "solve", cfg)[0] == EXIT_USAGE

    def test_nonconvergence_exit(self, tmp_path):
        cfg = {"rank": 3, "q": {"zeros": [[0, 0, 1]]}, "grid": DISC_COARSE, "max_iter": 1}
        assert run(tmp_path, "solve", cfg)[0] == EXIT_FAIL


class TestVerify:
    def test_baseline_positive_beta(self, solved, tmp_path):
        code, out = run(tmp_path, "verify", {"solution": str(solved), "betas": [1]})
        rep = json.loads((out / "verify.json").read_text())
        assert code == EXIT_OK and rep["passed"]
        assert (out / "sigma_1.svg").read_text().startswith("<svg")

    def test_baseline_negative_beta_fails_lower_bound(self, solved, tmp_path):
        code, out = run(tmp_path, "verify", {"solution": str(solved), "betas": [-0.5]})
        rep = json.loads((out / "verify.json").read_text())
        checks = {c["name"]: c["passed"] for c in rep["entropy"]["-0.5"]["checks"]}
        assert code == EXIT_FAIL and not checks["S_min >= S_{r,beta} - 1e-8"]

    def test_flat_instance_flags(self, tmp_path):
        run(tmp_path, "solve", {"rank": 4, "q": {"zeros": []}, "grid": DISC_COARSE}, out="flat")
        code, out = run(tmp_path, "verify", {"solution": "flat", "betas": [-0.5, 1]}, out="v")
        rep = json.loads((out / "verify.json").read_text())
        assert code == EXIT_OK and rep["kind"] == "flat"
        assert any("flat case" in n for n in rep["adjacent_bounds"]["notes"])

    def test_missing_solution(self, tmp_path):
        assert run(tmp_path, "verify", {"solution": "nowhere"})[0] == EXIT_FAIL

    def test_corrupted_field(self, solved, tmp_path):
        import shutil

        broken = tmp_path / "broken"
        shutil.copytree(solved, broken)
        f = broken / "u_1.csv"
        f.write_text(f.read_text()[:-20] + "\n")
        assert run(tmp_path, "verify", {"solution": str(broken)})[0] == EXIT_FAIL


class TestEntropy:
    def test_outputs(self, solved, tmp_path):
        code, out = run(tmp_path, "entropy", {"solution": str(solved), "betas": [1, 3]})
        assert code == EXIT_OK
        assert {p.name for p in out.iterdir()} >= {"entropy.json", "entropy_beta_1.csv", "entropy_beta_3.svg"}

    def test_zero_beta_usage(self, solved, tmp_path):
        assert run(tmp_path, "entropy", {"solution": str(solved), "betas": [0]})[0] == EXIT_USAGE


class TestLemmaPQ:
    def test_zero_violations(self, tmp_path):
        code, out = run(tmp_path, "lemma-pq", {"count": 500, "seed": 42})
        rep = json.loads((out / "lemma_pq.json").read_text())
        assert code == EXIT_OK and rep["violations"] == [] and rep["generator"] == "numpy.random.Philox"

    def test_count_zero_vacuous(self, tmp_path):
        code, out = run(tmp_path, "lemma-pq", {"count": 0})
        rep = json.loads((out / "lemma_pq.json").read_text())
        assert code == EXIT_OK and rep["warnings"]

    def test_deterministic_bytes(self, tmp_path):
        run(tmp_path, "lemma-pq", {"count": 200}, out="a", extra=["--seed", "7"])
        run(tmp_path, "lemma-pq", {"count": 200}, out="b", extra=["--seed", "7"])
        run(tmp_path, "lemma-pq", {"count": 200}, out="c", extra=["--seed", "8"])
        a, b, c = ((tmp_path / d / "lemma_pq.json").read_bytes() for d in "abc")
        assert a == b and a != c

    def test_bad_range(self, tmp_path):
        assert run(tmp_path, "lemma-pq", {"r_min": 5, "r_max": 3})[0] == EXIT_USAGE


def test_unreadable_config(tmp_path):
    assert main(["spectrum", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == EXIT_USAGE


def test_console_entry_point(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"betas": [1], "r_values": [10, 20]}))
    proc = subprocess.run(
        [sys.executable, "-m", "cyclic_entropy.cli", "spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")],
        capture_output=True,
    )
    assert proc.returncode == 0
    bad = subprocess.run([sys.executable, "-m", "cyclic_entropy.cli", "frobnicate"], capture_output=True)
    assert bad.returncode == 2
