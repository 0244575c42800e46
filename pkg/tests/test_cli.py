import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from tikhonov.cli import (EXIT_HYPOTHESIS, EXIT_INTEGRATION, EXIT_OK, EXIT_USAGE, UsageError, build_model,
                          compile_expr, main, matrix_function, run_columns)


def read_csv(path):
    lines = path.read_text().splitlines()
    meta = dict(l[2:].split("=", 1) for l in lines if l.startswith("# "))
    rows = list(csv.reader([l for l in lines if not l.startswith("#")]))
    return meta, rows[0], np.array(rows[1:], dtype=float)


def test_run_writes_reproducible_csv(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["run", "--model", "allee", "--eps", "0.05", "--t-end", "5", "--dt-out", "0.5"]
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    meta, header, data = read_csv(a)
    assert header == run_columns(build_model("allee", {}))
    assert data.shape == (11, len(header))
    assert meta["init_source"] == "default" and json.loads(meta["init"]) == [0.2, 0.0]
    assert meta["eps"] == "0.05" and len(meta["config_hash"]) == 16
    assert data[0, header.index("err_composite")] == 0.0


def test_predprey_column_count_and_init_order(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["run", "--model", "predprey", "--eps", "0.05", "--t-end", "1", "--dt-out", "0.25",
                 "--init", "3,1,1.5", "--out", str(out)]) == EXIT_OK
    meta, header, data = read_csv(out)
    n, m = 2, 1
    assert len(header) == 1 + 3 * (n + m) + 3 == 13
    np.testing.assert_array_equal(data[0, 1:4], [3.0, 1.0, 1.5])
    assert meta["init_source"] == "cli"


def test_config_hash_tracks_settings(tmp_path):
    hashes = []
    for eps in ("0.05", "0.04"):
        out = tmp_path / f"{eps}.csv"
        main(["run", "--model", "allee", "--eps", eps, "--t-end", "1", "--dt-out", "0.5", "--out", str(out)])
        hashes.append(read_csv(out)[0]["config_hash"])
    assert hashes[0] != hashes[1]


def test_plot_option_writes_png_next_to_csv(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["run", "--model", "allee", "--eps", "0.05", "--t-end", "2", "--dt-out", "0.1", "--out", str(out),
                 "--plot"]) == EXIT_OK
    assert (tmp_path / "r.png").read_bytes()[:4] == b"\x89PNG"
    assert main(["run", "--model", "allee", "--plot"]) == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ["run", "--model", "allee", "--literal-paper-eq7"],
    ["run", "--model", "allee", "--eps", "0.5"],
    ["run", "--model", "allee", "--init", "1,2,3"],
    ["run", "--model", "allee", "--config", "{\"params\": {\"beta\": 0.1}}"],
    ["run", "--model", "user-json"],
    ["sweep", "--model", "allee", "--eps-list", "0.01,0.02"],
    ["dichotomy"],
    ["run", "--config", "/nonexistent.json"],
])
def test_usage_errors_exit_64(argv, capsys):
    assert main(argv) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_argparse_errors_exit_64():
    with pytest.raises(SystemExit) as info:
        main(["run", "--model", "nope"])
    assert info.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == EXIT_USAGE


def test_integration_failure_exits_2(tmp_path):
    cfg = {"model": {"n": 1, "m": 1, "f": ["u0**2"], "g": ["u0 - v0"], "init": [1.0, 1.0], "eps_max": 0.5}}
    path = tmp_path / "blow.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", "--model", "user-json", "--config", str(path), "--eps", "0.1", "--t-end", "3",
                 "--dt-out", "0.5"]) == EXIT_INTEGRATION


def test_user_json_model_run(tmp_path, capsys):
    cfg = {"model": {"name": "linear", "n": 1, "m": 1, "slow": ["x"], "fast": ["y"],
                     "f": ["-k*x + y - x"], "g": ["x - y"], "params": {"k": 0.5}, "init": [2.0, 0.0],
                     "equilibria": [[0.0]], "eps_max": 0.5}}
    assert main(["run", "--model", "user-json", "--config", json.dumps(cfg), "--eps", "0.01", "--t-end", "2",
                 "--dt-out", "0.5"]) == EXIT_OK
    text = capsys.readouterr().out
    header = [l for l in text.splitlines() if not l.startswith("#")][0].split(",")
    assert header[1] == "u_full_x" and header[2] == "v_full_y"
    assert main(["check", "--model", "user-json", "--config", json.dumps(cfg), "--t-end", "10"]) == EXIT_OK


def test_check_exit_codes(tmp_path):
    out = tmp_path / "allee.json"
    assert main(["check", "--model", "allee", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["verdict"] == "PASS"
    out = tmp_path / "pp.json"
    assert main(["check", "--model", "predprey", "--out", str(out)]) == EXIT_HYPOTHESIS
    assert json.loads(out.read_text())["failing"] == ["A5"]


def test_require_hypotheses_gate():
    assert main(["run", "--model", "predprey", "--require-hypotheses", "--t-end", "1"]) == EXIT_HYPOTHESIS


def test_sweep_outputs(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--model", "allee", "--eps-list", "0.08,0.04", "--t-end", "10", "--out",
                 str(out)]) == EXIT_OK
    report = json.loads((tmp_path / "s.json").read_text())
    assert [r["eps"] for r in report["results"]] == [0.08, 0.04]
    assert isinstance(report["order"]["sup_u_after"], float)
    meta, header, data = read_csv(out)
    assert header[0] == "eps" and data.shape == (2, 6)


def test_sweep_single_eps_has_null_order(capsys):
    assert main(["sweep", "--model", "allee", "--eps-list", "0.08", "--t-end", "2"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["order"]["sup_u_after"] is None


def test_dichotomy_command(tmp_path, capsys):
    spec = {"matrix": [[-1, "sin(t)"], [0, -1]], "horizon": 3.0}
    assert main(["dichotomy", "--config", json.dumps(spec), "--eps-list", "0.1,0.05", "--sigma", "0.25"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert [f["c"] for f in rep["fits"]] == pytest.approx([1.0, 1.0], abs=1e-6)
    assert rep["c_stable"]
    assert main(["dichotomy", "--config", json.dumps({"matrix": [[0.5]]})]) == EXIT_HYPOTHESIS


def test_hints_lists_every_column(capsys):
    assert main(["hints", "--model", "predprey"]) == EXIT_OK
    out = capsys.readouterr().out
    for i, name in enumerate(run_columns(build_model("predprey", {})), start=1):
        assert f"{i:2d}  {name}" in out


def test_expression_whitelist():
    assert compile_expr("2*sin(pi*t)+a", ["t", "a"])({"t": 0.5, "a": 1.0}) == pytest.approx(3.0)
    assert compile_expr(4, [])({}) == 4.0
    for bad in ("__import__('os')", "t.real", "[t]", "lambda: 1", "foo(t)", "x", "'s'"):
        with pytest.raises(UsageError):
            compile_expr(bad, ["t"])
    D = matrix_function([["-2 + cos(t)", 0], [1, -3]])
    np.testing.assert_allclose(D(0.0), [[-1.0, 0.0], [1.0, -3.0]])
    with pytest.raises(UsageError):
        matrix_function([[1, 2]])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tikhonov", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("tikhonov")
