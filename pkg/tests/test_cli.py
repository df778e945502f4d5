import csv
import json
import os
import subprocess
import sys

import numpy as np

from biokernel.cli import main

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def cfg(name):
    return os.path.join(CONFIGS, name)


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_verify_suite_exit_zero(capsys):
    assert main(["verify", "--suite", "gue"]) == 0
    out = capsys.readouterr()
    rows = [json.loads(line) for line in out.out.splitlines()]
    assert len(rows) == 7 and all(r["passed"] for r in rows)
    assert set(rows[0]) == {"check_name", "discrepancy", "tolerance", "passed"}
    assert "PASS" in out.err


def test_verify_config_failure_exit_three(tmp_path, capsys):
    path = write_json(tmp_path / "v.json", {
        "ensemble": {"W": {"variant": "Gaussian", "params": {"tau": 1.0}},
                     "sources": [{"b": 0.0}]},
        "checks": [{"check": "trace", "grid": {"kind": "line", "lo": -2, "hi": 2, "h": 0.5},
                    "tolerance": 1e-9}]})
    out = tmp_path / "v.jsonl"
    assert main(["verify", path, "--out", str(out)]) == 3
    assert not json.loads(out.read_text())["passed"]
    assert (tmp_path / "v.png").exists()
    assert "FAIL" in capsys.readouterr().err


def test_verify_shipped_custom_config(tmp_path):
    assert main(["verify", cfg("verify_custom.json"), "--out", str(tmp_path / "c.jsonl")]) == 0


def test_density_normalization(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["density", cfg("gue_n1_density.json"), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0] == ["x", "kernel_diagonal", "density"]
    data = np.array(rows[1:], dtype=float)
    x, d = data[:, 0], data[:, 2]
    assert abs(np.sum(np.diff(x) * (d[1:] + d[:-1]) / 2) - 1) < 1e-4
    assert (tmp_path / "d.png").exists()


def test_kernel_csv_and_thread_independence(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["--threads", "1", "kernel", cfg("gue_n3.json"), "--grid=-2:2:9",
                 "--out", str(a)]) == 0
    assert main(["--threads", "4", "kernel", cfg("gue_n3.json"), "--grid=-2:2:9",
                 "--out", str(b)]) == 0
    assert a.read_text() == b.read_text()
    rows = read_csv(a)
    assert rows[0] == ["x", "x_prime", "re", "im", "err_est"]
    assert len(rows) == 1 + 9 * 2
    # 17 significant digits round-trip the doubles
    v = float(rows[5][2])
    assert repr(v) == repr(float(f"{v:.17g}"))
    assert (tmp_path / "a.png").exists()
    assert not [p for p in os.listdir(tmp_path) if p.endswith(".tmp")]


def test_malformed_json_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"variant": "additive",\n "ensemble": {"W": }\n}')
    assert main(["kernel", str(bad), "--out", str(tmp_path / "k.csv")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_bad_key_exit_two_names_key(tmp_path, capsys):
    path = write_json(tmp_path / "k.json", {
        "variant": "additive",
        "ensemble": {"W": {"variant": "Gaussian", "params": {"tau": 1.0}},
                     "sources": "zero"},
        "grid": {"x": [0.0]}})
    assert main(["kernel", path, "--out", str(tmp_path / "k.csv")]) == 2
    assert "sources" in capsys.readouterr().err
    path = write_json(tmp_path / "k2.json", {"variant": "nonsense"})
    assert main(["kernel", path, "--out", str(tmp_path / "k.csv")]) == 2
    assert "variant" in capsys.readouterr().err
    assert main(["kernel", str(tmp_path / "missing.json"), "--out", "x.csv"]) == 2


def test_numeric_failure_exit_one(tmp_path, capsys):
    # non-integer ν at x <= 0 has no admissible t-contour
    path = write_json(tmp_path / "p.json", {
        "variant": "pbessel",
        "params": {"nu": 0.5, "r": 0.0, "W": {"variant": "Gaussian", "params": {"tau": 1.0}}},
        "grid": {"x": [-1.0], "xp": [1.0]}})
    assert main(["kernel", path, "--out", str(tmp_path / "p.csv")]) == 1
    assert "numeric failure" in capsys.readouterr().err


def test_limit_scan_csv(tmp_path):
    path = write_json(tmp_path / "s.json", {"scan": {"N_list": [4, 8], "grid": [0.5, 1.0],
                                                     "final_bound": 1.0}})
    out = tmp_path / "s.csv"
    code = main(["limit", path, "--scan", "pbessel", "--out", str(out)])
    rows = read_csv(out)
    assert rows[0] == ["N", "sup_error", "ratio_to_previous"]
    assert [r[0] for r in rows[1:]] == ["4", "8"] and rows[1][2] == ""
    errs = [float(r[1]) for r in rows[1:]]
    assert code == (0 if errs[1] < errs[0] else 3)
    assert (tmp_path / "s.png").exists()


def test_sample_outputs(tmp_path):
    path = write_json(tmp_path / "g.json", {"sample": {"model": "gue", "N": 1, "a": [0.0],
                                                       "grid": {"start": -6, "stop": 6,
                                                                "num": 121}}})
    out = tmp_path / "g.csv"
    assert main(["sample", path, "--count", "20000", "--seed", "3", "--out", str(out)]) == 0
    rep = json.loads((tmp_path / "g_report.json").read_text())
    assert rep["passed"] and rep["check_name"] == "empirical_vs_kernel"
    assert read_csv(out)[0] == ["draw_index", "eigenvalue_rank", "value"]
    assert (tmp_path / "g.png").exists()
    first = out.read_text()
    assert main(["sample", path, "--count", "20000", "--seed", "3", "--out", str(out)]) == 0
    assert out.read_text() == first


def test_threads_env_fallback(tmp_path, monkeypatch):
    from biokernel.cli import thread_count
    monkeypatch.setenv("BIOKERNEL_THREADS", "3")
    assert thread_count(None) == 3
    assert thread_count(2) == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "biokernel", "verify", "--suite", "nope"],
                          capture_output=True, text=True)
    assert proc.returncode == 2 and "--suite" in proc.stderr
