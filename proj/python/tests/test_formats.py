"""Checks the file formats consumed by the plotting scripts."""

import csv

import numpy as np

import saddlekit as sk

TRACE_COLUMNS = [
    "iter", "kkt", "step_norm_P", "aux_gap_P", "dist2_ref", "distP_ref",
    "num_dual_pos", "num_primal_tight",
]


def parse_kv(text):
    lines = [l for l in text.splitlines() if l.strip()]
    header, body = lines[0], lines[1:]
    out = {}
    for line in body:
        if line.lstrip().startswith("#"):
            continue
        key, _, value = line.partition(":")
        out[key.strip()] = value.split("#")[0].strip()
    return header, out


def run(*args):
    code, out, err = sk.run_cli(list(args))
    return code, out, err


def test_trace_csv_and_sidecars(tmp_path):
    csv_path = tmp_path / "run.csv"
    code, _, err = run("solve", "--instance", "builtin:intro-qp", "--algo", "admm",
                       "--out", str(csv_path))
    assert code == 0, err
    with open(csv_path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == TRACE_COLUMNS
    data = np.array(rows[1:], dtype=float)
    assert data.shape[1] == len(TRACE_COLUMNS)
    assert np.all(np.diff(data[:, 0]) > 0)
    assert data[-1, 4] == 0.0 and data[-1, 5] == 0.0
    assert np.all(data[:, 6] == np.round(data[:, 6]))

    header, summary = parse_kv((tmp_path / "run.summary").read_text())
    assert header == "saddlekit-summary v1"
    assert summary["algorithm"] == "admm"
    assert summary["status"] == "converged"
    assert int(summary["rows"]) == data.shape[0]

    active = (tmp_path / "run.active").read_text().splitlines()
    assert active[0] == "saddlekit-active v1"
    assert active[1] == "# eps 1e-08"
    active = [l for l in active if not l.startswith("#")]
    assert len(active) - 1 == data.shape[0]
    iters, flags = active[1].split()
    assert int(iters) == 0 and len(flags) == 4
    assert set("".join(l.split()[1] for l in active[1:])) <= set("0123456789abcdefghijklmnopqrstuv")


def test_analysis_and_moduli_reports(tmp_path):
    csv_path = tmp_path / "pdhg.csv"
    assert run("solve", "--instance", "builtin:intro-qp", "--algo", "pdhg",
               "--out", str(csv_path))[0] == 0
    code, out, err = run("analyze", "--trace", str(csv_path), "--instance", "builtin:intro-qp")
    assert code == 0, err
    header, rep = parse_kv(out)
    assert header == "saddlekit-report v1"
    assert rep["kind"] == "analysis"
    assert rep["degenerate"] == "true"
    assert rep["B_d"] == "[2]"
    assert int(rep["k_star"]) > 0
    assert float(rep["fit.post_rate"]) < float(rep["fit.pre_rate"]) < 0

    code, out, err = run("moduli", "--instance", "builtin:rotated-house", "--samples", "1000")
    assert code == 0, err
    header, rep = parse_kv(out)
    assert rep["kind"] == "moduli"
    for name in ("alpha_G", "alpha_L", "alpha_M"):
        assert int(rep[name + ".samples"]) <= int(rep[name + ".attempts"])
    assert rep["ordering_consistent"] == "true"
