import csv
import json

import numpy as np

from neutralsys.cli import main

from conftest import EXAMPLE1_DOC


def run_cli(*args):
    return main(list(args))


def test_spectrum_example1(example1_file, tmp_path, capsys):
    out = tmp_path / "out"
    code = run_cli(
        "spectrum", "--input", str(example1_file), "--out", str(out),
        "--re-min", "-1", "--re-max", "1", "--im-max", "40", "--k-range", "5:8",
    )
    assert code == 0
    doc = json.loads((out / "spectrum.json").read_text())
    assert doc["total_count"] > 0
    # two roots in every far chain circle
    assert doc["cluster_checks"]
    assert all(c["match"] and c["count"] == 2 for c in doc["cluster_checks"])
    with (out / "roots.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert rows
    # chain clusters carry two roots each near 2 pi k
    near = [r for r in rows if abs(float(r["im"]) - 2 * np.pi * 2) < 1.0]
    assert len(near) == 2


def test_stability_example2(example2_file, tmp_path):
    out = tmp_path / "out"
    assert run_cli("stability", "--input", str(example2_file), "--out", str(out)) == 0
    doc = json.loads((out / "stability.json").read_text())
    assert doc["asymptotic_case"] == "case_iii_indeterminate"
    assert doc["exponential"] == "not_stable"


def test_missing_input_exits_3(tmp_path, capsys):
    assert run_cli("spectrum", "--input", str(tmp_path / "nope.json"),
                   "--out", str(tmp_path)) == 3
    err_lines = capsys.readouterr().err.strip().splitlines()
    assert err_lines
    record = json.loads(err_lines[-1])  # diagnostics are single-line JSON
    assert record["level"] == "error" and record["event"] == "io_error"


def test_malformed_input_exits_3(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert run_cli("spectrum", "--input", str(bad), "--out", str(tmp_path)) == 3


def test_invalid_dimensions_exit_1(tmp_path):
    doc = json.loads(json.dumps(EXAMPLE1_DOC))
    doc["A_minus1"] = [[1.0]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert run_cli("stability", "--input", str(bad), "--out", str(tmp_path)) == 1


def test_unknown_command_exits_1():
    assert run_cli("frobnicate", "--input", "x.json") == 1


def test_deterministic_outputs(example1_file, tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert run_cli(
            "spectrum", "--input", str(example1_file), "--out", str(out),
            "--seed", "7", "--k-range", "5:6",
        ) == 0
    assert (out_a / "spectrum.json").read_bytes() == (out_b / "spectrum.json").read_bytes()
    assert (out_a / "roots.csv").read_bytes() == (out_b / "roots.csv").read_bytes()


def test_simulate_command(example2_file, tmp_path):
    out = tmp_path / "out"
    code = run_cli(
        "simulate", "--input", str(example2_file), "--out", str(out),
        "--T", "5", "--grid-m", "64", "--history", "random", "--seed", "3",
    )
    assert code == 0
    lines = (out / "trajectory.csv").read_text().strip().splitlines()
    assert lines[0] == "t,z1,z2,m2_norm"
    assert len(lines) == 1 + 5 * 64 + 1


def test_simulate_with_sine_control(tmp_path, example1_file):
    doc = json.loads(json.dumps(EXAMPLE1_DOC))
    doc["r"] = 1
    doc["B"] = [[0.0], [1.0]]
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "out"
    code = run_cli(
        "simulate", "--input", str(path), "--out", str(out),
        "--T", "2", "--grid-m", "32", "--history", "zero",
        "--control", "sine", "--control-amplitude", "0.5",
    )
    assert code == 0
    rows = (out / "trajectory.csv").read_text().strip().splitlines()
    last = [float(x) for x in rows[-1].split(",")]
    assert any(abs(v) > 0 for v in last[1:])


def test_reach_command(tmp_path):
    doc = {
        "n": 2, "r": 1, "h": 1.0,
        "A_minus1": [[0.5, 0.0], [0.0, 1.0 / 3.0]],
        "A2": {"breakpoints": [-1.0, 0.0], "segments": [[[0.0, 0.0], [0.0, 0.0]]]},
        "A3": {"breakpoints": [-1.0, 0.0], "segments": [[[0.0, 0.0], [0.0, 0.0]]],
               "atoms": [{"theta": 0.0, "matrix": [[0.0, 1.0], [0.0, 0.0]]}]},
        "B": [[0.0], [1.0]],
    }
    path = tmp_path / "reach.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "out"
    code = run_cli(
        "reach", "--input", str(path), "--out", str(out),
        "--T-list", "0.5,1.5,2.5", "--grid-m", "50", "--control-intervals", "200",
    )
    assert code == 0
    prof = json.loads((out / "rank_profile.json").read_text())
    ranks = [e["effective_rank"] for e in prof["entries"]]
    assert ranks == sorted(ranks)
    lines = (out / "rank_profile.csv").read_text().strip().splitlines()
    assert len(lines) == 4


def test_report_example2(example2_file, tmp_path):
    out = tmp_path / "rep"
    assert run_cli("report", "--input", str(example2_file), "--out", str(out),
                   "--grid-m", "64", "--T", "3") == 0
    index = json.loads((out / "index.json").read_text())
    assert index["consistency"]["exponential_stable_implies_exp_regime"]
    assert "stability.json" in index["files"]
    assert "spectrum.json" in index["files"]
    assert "trajectory.csv" in index["files"]
    assert "run_meta.json" not in index["files"]


def test_report_with_inputs(tmp_path):
    doc = json.loads(json.dumps(EXAMPLE1_DOC))
    doc["r"] = 1
    doc["B"] = [[0.0], [1.0]]
    # stable-spectrum variant so every analysis completes quickly
    doc["A3"]["atoms"][0]["matrix"] = [[-1.0, 0.0], [0.0, -1.0]]
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(doc))
    out = tmp_path / "rep"
    code = run_cli("report", "--input", str(path), "--out", str(out),
                   "--grid-m", "64", "--T", "3", "--k-range", "5:6")
    assert code == 0
    index = json.loads((out / "index.json").read_text())
    for name in ("stabilizability.json", "controllability.json",
                 "rank_profile.csv", "rank_profile.json"):
        assert name in index["files"]
