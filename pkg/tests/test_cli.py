import json
import math
import subprocess
import sys

import numpy as np
import pytest

from dirate.cli import main
from dirate.harness import canonical_json
from dirate.model import reference_model, save_model


@pytest.fixture
def w1_file(tmp_path):
    path = tmp_path / "w1.json"
    save_model(reference_model("W1"), path)
    return str(path)


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


class TestSimulate:
    def test_rows_and_columns(self, w1_file, tmp_path):
        out = tmp_path / "d.csv"
        assert main(["simulate", w1_file, "-n", "100", "--seed", "1", "-o", str(out)]) == 0
        rows = out.read_text().splitlines()
        assert len(rows) == 101 and rows[0] == "w0,w1,w2"
        assert all(len(r.split(",")) == 3 for r in rows[1:])

    def test_deterministic(self, w1_file, tmp_path):
        for name in ("a.csv", "b.csv"):
            main(["simulate", w1_file, "-n", "50", "--seed", "3", "-o", str(tmp_path / name)])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_unstable(self, tmp_path, capsys):
        bad = write_json(tmp_path / "u.json", {"coeffs": [[[1.0, 0], [0, 0]]], "noise_cov": [[1, 0], [0, 1]],
                                               "partition": {"x": [0], "y": [1]}})
        assert main(["simulate", bad, "-n", "10", "-o", str(tmp_path / "d.csv")]) == 2
        assert "unstable" in capsys.readouterr().err

    def test_noise_not_pd_names_assumption(self, tmp_path, capsys):
        bad = write_json(tmp_path / "q.json", {"coeffs": np.zeros((1, 3, 3)).tolist(),
                                               "noise_cov": np.diag([1, -0.1, 1]).tolist(),
                                               "partition": {"x": [0], "y": [1], "z": [2]}})
        assert main(["simulate", bad, "-n", "10", "-o", str(tmp_path / "d.csv")]) == 2
        assert "positive definite" in capsys.readouterr().err

    def test_missing_model(self, tmp_path):
        assert main(["simulate", str(tmp_path / "nope.json"), "-n", "5", "-o", str(tmp_path / "d.csv")]) == 2

    def test_bad_json(self, tmp_path):
        (tmp_path / "x.json").write_text("{not json")
        assert main(["simulate", str(tmp_path / "x.json"), "-n", "5", "-o", str(tmp_path / "d.csv")]) == 2


class TestTruth:
    def test_w1(self, w1_file, tmp_path):
        assert main(["truth", w1_file, "-o", str(tmp_path / "t.json")]) == 0
        d = read_json(tmp_path / "t.json")
        assert d["value_nats"] == pytest.approx(0.346574, abs=1e-6)
        assert d["units"] == "nats" and "horizon_sigma" in d and "gap_gamma" in d

    def test_decoupled(self, capsys):
        assert main(["truth", "decoupled"]) == 0
        assert abs(json.loads(capsys.readouterr().out)["value_nats"]) <= 1e-8

    @pytest.mark.parametrize("tol", ["0", "-1"])
    def test_bad_tol(self, w1_file, tol):
        assert main(["truth", w1_file, "--tol", tol]) == 2

    def test_no_convergence(self, tmp_path):
        slow = write_json(tmp_path / "s.json", {"coeffs": [[[0.99, 0.0], [1.0, 0.0]]],
                                                "noise_cov": [[1, 0], [0, 1]],
                                                "partition": {"x": [0], "y": [1]}})
        assert main(["truth", slow, "--i-max", "16"]) == 3


class TestEstimate:
    @pytest.fixture
    def w1_data(self, w1_file, tmp_path):
        out = tmp_path / "w1.csv"
        main(["simulate", w1_file, "-n", str(2**15), "--seed", "0", "-o", str(out)])
        return str(out)

    def test_log_rule(self, w1_data, w1_file, tmp_path):
        assert main(["estimate", w1_data, "--partition", w1_file, "--p-rule", "log:1",
                     "-o", str(tmp_path / "e.json")]) == 0
        d = read_json(tmp_path / "e.json")
        assert d["p"] == 11 and d["M"] == 2**15 - 11 and d["N"] == 2**15
        assert d["mean_subtracted"] is True
        assert d["I_hat_nats"] == pytest.approx(0.3466, abs=0.05)

    def test_bits(self, w1_data, tmp_path, capsys):
        part = write_json(tmp_path / "p.json", {"x": [0], "y": [1], "z": [2]})
        assert main(["estimate", w1_data, "--partition", part, "--p", "4", "--bits", "--no-mean"]) == 0
        captured = capsys.readouterr()
        d = json.loads(captured.out)
        assert d["I_hat_bits"] == pytest.approx(d["I_hat_nats"] / 0.693147, rel=1e-6)
        assert d["mean_subtracted"] is False
        assert "bits" in captured.err

    def test_partition_out_of_range(self, w1_data, tmp_path):
        part = write_json(tmp_path / "p.json", {"x": [0], "y": [1], "z": [3]})
        assert main(["estimate", w1_data, "--partition", part, "--p", "2"]) == 2

    def test_singular_names_p_and_m(self, tmp_path, capsys):
        data = tmp_path / "c.csv"
        data.write_text("w0,w1\n" + "\n".join(f"{k},{2 * k}" for k in range(20)) + "\n")
        part = write_json(tmp_path / "p.json", {"x": [0], "y": [1]})
        assert main(["estimate", str(data), "--partition", part, "--p", "3"]) == 4
        err = capsys.readouterr().err
        assert "p = 3" in err and "M = 17" in err


class TestBound:
    def test_huge_n_valid(self, w1_file, capsys):
        assert main(["bound", w1_file, "-n", str(10**12), "--p", "1"]) == 0
        d = json.loads(capsys.readouterr().out)
        assert d["valid"] is True and d["total"] < 0.05
        assert "grid" in d["note"]
        assert set(d["predictors"]) == {"H", "J", "rho"}

    def test_tiny_n_invalid(self, w1_file, capsys):
        assert main(["bound", w1_file, "-n", "64"]) == 0
        d = json.loads(capsys.readouterr().out)
        assert d["valid"] is False and d["total"] == "inf"

    def test_w2_frozen(self, capsys):
        assert main(["bound", "W2", "-n", str(2**16), "--p", "11", "--nu", "0.1"]) == 0
        d = json.loads(capsys.readouterr().out)
        assert d["epsilon"] == pytest.approx(209.05158063558278, rel=1e-9)
        assert d["tail_term"] == pytest.approx(0.19601486431160318, rel=1e-6)
        assert d["valid"] is False

    def test_bad_nu(self, w1_file):
        assert main(["bound", w1_file, "-n", "1000", "--nu", "1.5"]) == 2


class TestExperiment:
    def test_single_trial(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {"model": "W1", "N": [256], "trials": 1, "seed": 4})
        out = tmp_path / "r.csv"
        assert main(["experiment", cfg, "-o", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 2
        assert read_json(tmp_path / "r.summary.json")["total_trials"] == 1

    def test_deterministic(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {"model": "W2", "N": [64, 128, 256], "trials": 3})
        main(["experiment", cfg, "-o", str(tmp_path / "a.csv")])
        main(["experiment", cfg, "-o", str(tmp_path / "b.csv"), "--workers", "3"])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.summary.json").read_bytes() == (tmp_path / "b.summary.json").read_bytes()

    def test_all_fail(self, tmp_path):
        model = {"coeffs": np.zeros((1, 5, 5)).tolist(), "noise_cov": np.eye(5).tolist(),
                 "partition": {"x": [0], "y": [1], "z": [2, 3, 4]}}
        cfg = write_json(tmp_path / "c.json", {"model": model, "N": [8], "trials": 2})
        assert main(["experiment", cfg, "-o", str(tmp_path / "r.csv")]) == 5

    def test_bad_config(self, tmp_path):
        cfg = write_json(tmp_path / "c.json", {"model": "W1", "N": [256, 128]})
        assert main(["experiment", cfg, "-o", str(tmp_path / "r.csv")]) == 2


def test_json_outputs_roundtrip(tmp_path, capsys):
    for argv in (["truth", "W2"], ["bound", "W2", "-n", "100000"]):
        main(argv)
        text = capsys.readouterr().out
        assert canonical_json(json.loads(text)) == text


def test_full_precision(capsys):
    main(["truth", "W1"])
    value = json.loads(capsys.readouterr().out)["value_nats"]
    assert value == pytest.approx(0.5 * math.log(2), abs=1e-15)


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "dirate", "truth", "W1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["value_nats"] == pytest.approx(0.3465736, abs=1e-7)
