import json
import subprocess
import sys

import numpy as np
import pytest

from lpyramids.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from lpyramids.csvio import read_jsonl, read_matrix_csv
from lpyramids.experiments import noisy_step, run_step_denoise, step_signal
from lpyramids.kernels import BandwidthSchedule, PointSet
from lpyramids.lp_core import lp_extend_many, lp_fit


def write_csv(path, arr, header=None):
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    lines = [header] if header else []
    lines += [",".join(f"{v:.17g}" for v in row) for row in arr]
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def fit_inputs(tmp_path, rng):
    X = rng.random((12, 2))
    y = np.sin(3 * X[:, 0]) + X[:, 1] ** 2
    Q = rng.random((30, 2)) * 1.4 - 0.2
    return (
        X, y, Q,
        write_csv(tmp_path / "samples.csv", X, "x1,x2"),
        write_csv(tmp_path / "values.csv", y[:, None]),
        write_csv(tmp_path / "queries.csv", Q),
    )


def test_fit_extend_matches_library(tmp_path, fit_inputs):
    X, y, Q, s, v, q = fit_inputs
    out = tmp_path / "out"
    assert main(["fit-extend", s, v, q, "--sigma0", "0.7", "--mu", "2", "--out", str(out)]) == EXIT_OK
    got = read_matrix_csv(out / "extension.csv")[:, 0]
    model, report = lp_fit(PointSet(X), y, schedule=BandwidthSchedule.geometric(0.7, 2.0))
    np.testing.assert_allclose(got, lp_extend_many(model, Q), rtol=0, atol=1e-12)

    recs = read_jsonl(out / "report.jsonl")
    assert [r["record"] for r in recs] == ["config", "fit", "stability"]
    assert recs[0]["sigma0"] == 0.7
    assert recs[1]["n_levels"] == report.n_levels
    assert recs[1]["stop_reason"] == report.stop_reason.value
    assert recs[2]["satisfied"] is True


def test_fit_extend_empty_queries(tmp_path, fit_inputs):
    *_, s, v, _ = fit_inputs
    q = tmp_path / "empty.csv"
    q.write_text("")
    out = tmp_path / "out"
    assert main(["fit-extend", s, v, str(q), "--out", str(out)]) == EXIT_OK
    assert (out / "extension.csv").read_text() == "value\n"
    assert len(read_jsonl(out / "report.jsonl")) == 3


def test_fit_extend_nan_value_reports_line(tmp_path, fit_inputs, capsys):
    *_, s, _, q = fit_inputs
    v = tmp_path / "bad.csv"
    v.write_text("1.0\n2.0\nnan\n" + "0.5\n" * 9)
    assert main(["fit-extend", s, str(v), q, "--out", str(tmp_path / "o")]) == EXIT_DATA
    err = capsys.readouterr().err
    assert "bad.csv:3" in err


def test_fit_extend_shape_mismatch(tmp_path, fit_inputs):
    *_, s, _, q = fit_inputs
    v = write_csv(tmp_path / "short.csv", np.ones((5, 1)))
    assert main(["fit-extend", s, v, q, "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_fit_extend_power_law_needs_q(tmp_path, fit_inputs):
    *_, s, v, q = fit_inputs
    args = ["fit-extend", s, v, q, "--profile", "power_law", "--out", str(tmp_path / "o")]
    assert main(args) == EXIT_USAGE
    assert main(args + ["--tail-q", "3.5"]) == EXIT_OK
    # q must exceed the dimension
    assert main(args + ["--tail-q", "1.5"]) == EXIT_USAGE


def test_config_file_and_flag_precedence(tmp_path, fit_inputs):
    X, y, Q, s, v, q = fit_inputs
    cfg = tmp_path / "run.cfg"
    cfg.write_text("sigma0 = 0.3\nmax-levels = 4\n")
    out = tmp_path / "o"
    assert main(["fit-extend", s, v, q, "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rec = read_jsonl(out / "report.jsonl")
    assert rec[0]["sigma0"] == 0.3 and rec[0]["max_levels"] == 4
    assert rec[1]["n_levels"] <= 4

    assert main(["fit-extend", s, v, q, "--config", str(cfg), "--sigma0", "0.9", "--out", str(out)]) == EXIT_OK
    rec = read_jsonl(out / "report.jsonl")
    assert rec[0]["sigma0"] == 0.9 and rec[0]["max_levels"] == 4


def test_config_unknown_key(tmp_path, fit_inputs):
    *_, s, v, q = fit_inputs
    cfg = tmp_path / "run.cfg"
    cfg.write_text("bogus = 1\n")
    assert main(["fit-extend", s, v, q, "--config", str(cfg)]) == EXIT_USAGE


def test_denoise_single_step(tmp_path):
    y = noisy_step(0, 0)
    sig = write_csv(tmp_path / "signal.csv", y[:, None])
    ref = write_csv(tmp_path / "ref.csv", step_signal()[:, None])
    out = tmp_path / "o"
    assert main(["denoise", sig, "--reference", ref, "--kernel-step", "1", "--iters", "1",
                 "--out", str(out)]) == EXIT_OK
    den = read_matrix_csv(out / "denoised.csv")[:, 0]
    assert den.shape == y.shape
    assert np.linalg.norm(den - step_signal()) < np.linalg.norm(y - step_signal())
    errs = read_matrix_csv(out / "errors.csv")
    assert errs.shape == (2, 2)


def test_denoise_matches_experiment_trial(tmp_path):
    res = run_step_denoise(trials=1, L_max=4, seed=7, threads=1)
    y = noisy_step(7, 0)
    sig = write_csv(tmp_path / "signal.csv", y[:, None])
    ref = write_csv(tmp_path / "ref.csv", step_signal()[:, None])
    for K in (1, 2, 3):
        out = tmp_path / f"o{K}"
        assert main(["denoise", sig, "--reference", ref, "--kernel-step", str(K), "--iters", "4",
                     "--out", str(out)]) == EXIT_OK
        errs = read_matrix_csv(out / "errors.csv")[:, 1]
        np.testing.assert_allclose(errs, res.tables["mean_errors"][f"Q{K}"], rtol=1e-12, atol=0)


def test_denoise_constant_signal_unchanged(tmp_path):
    sig = write_csv(tmp_path / "c.csv", np.full((20, 1), 0.25))
    out = tmp_path / "o"
    assert main(["denoise", sig, "--kernel-step", "2", "--iters", "3", "--all-iterates",
                 "--out", str(out)]) == EXIT_OK
    arr = read_matrix_csv(out / "denoised.csv")
    assert arr.shape == (20, 4)
    np.testing.assert_allclose(arr, 0.25, rtol=0, atol=1e-14)
    assert read_jsonl(out / "report.jsonl")[1]["kernel_degenerate"] is True


def test_denoise_too_short(tmp_path):
    sig = write_csv(tmp_path / "s.csv", np.array([[1.0], [2.0], [3.0], [4.0]]))
    assert main(["denoise", sig, "--patch-size", "3", "--out", str(tmp_path / "o")]) == EXIT_DATA


def test_experiment_circle(tmp_path):
    out = tmp_path / "o"
    assert main(["experiment", "circle", "--out", str(out)]) == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["circle_geometric"]["levels_to_convergence"] == 6
    assert summary["circle_plateaued"]["levels_to_convergence"] == 136
    grid = read_matrix_csv(out / "circle_geometric_grid.csv")
    assert grid.shape == (1000, 3)


def test_experiment_extrapolate_single_point_grids(tmp_path):
    out = tmp_path / "o"
    assert main(["experiment", "extrapolate", "--sigma0-grid", "1", "--mu-grid", "2",
                 "--out", str(out)]) == EXIT_OK
    s = json.loads((out / "summary.json").read_text())["extrapolation"]
    assert s["sigma0_monotone_violations"] == 0 and s["unconverged_refinements"] == 0
    assert main(["experiment", "extrapolate", "--mu-grid", "a,b", "--out", str(out)]) == EXIT_USAGE


def test_experiment_step_deterministic(tmp_path):
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / f"o{threads}"
        assert main(["experiment", "step", "--trials", "3", "--iters", "5", "--seed", "11",
                     "--threads", threads, "--out", str(out)]) == EXIT_OK
        outs.append((out / "step_denoise_mean_errors.csv").read_text())
    assert outs[0] == outs[1]


def test_unknown_experiment_and_bad_flags(tmp_path):
    assert main(["experiment", "nope", "--out", str(tmp_path)]) == EXIT_USAGE
    assert main(["fit-extend"]) == EXIT_USAGE
    assert main(["bogus"]) == EXIT_USAGE


def test_missing_input_file(tmp_path):
    missing = str(tmp_path / "missing.csv")
    assert main(["fit-extend", missing, missing, missing, "--out", str(tmp_path)]) == EXIT_DATA


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lpyramids", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "lpyramids" in proc.stdout
