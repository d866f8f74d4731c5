import json
import subprocess
import sys

import pytest

from closeout.cli import main, read_config, solution_from_dict, solution_to_dict
from closeout.gbm import DEFAULTS
from closeout.shortsale import solve


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_text_defaults(capsys):
    code, out, _ = run(capsys, "solve")
    assert code == 0
    assert "regime               A" in out
    assert "constrained z*       $0.37" in out
    assert "unconstrained z*     $0.36" in out


def test_solve_json_round_trip(capsys):
    code, out, _ = run(capsys, "solve", "--format", "json", "--mu", "0.02", "--lambda", "0.1")
    assert code == 0
    parsed = solution_from_dict(json.loads(out))
    assert parsed == solve(1.0, DEFAULTS.with_(mu=0.02, lam=0.1))


def test_solution_dict_round_trip_with_limit():
    sol = solve(1.0, DEFAULTS.with_(c=0.0))
    assert solution_from_dict(json.loads(json.dumps(solution_to_dict(sol)))) == sol


def test_zero_collateral_reports_limit(capsys):
    code, out, _ = run(capsys, "solve", "--c", "0")
    assert code == 0
    assert "close immediately" in out
    assert "threshold as c -> 0  $0.61" in out


def test_wait_forever_text(capsys):
    code, out, _ = run(capsys, "solve", "--r", "0")
    assert code == 0
    assert "never close voluntarily" in out
    assert "constrained value    $0.60" in out


def test_sweep_csv_stdout(capsys):
    code, out, _ = run(capsys, "sweep", "--vary", "lambda", "--from", "0", "--to", "0.1", "--steps", "3")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("param,value,regime")
    assert len(lines) == 4


def test_sweep_files_identical_across_workers(tmp_path, capsys):
    outputs = []
    for workers in ("1", "3"):
        csv, svg = tmp_path / f"s{workers}.csv", tmp_path / f"s{workers}.svg"
        code, out, _ = run(
            capsys, "sweep", "--vary", "c", "--from", "0", "--to", "100", "--steps", "21",
            "--mu", "0.02", "--csv", str(csv), "--svg", str(svg), "--workers", workers,
        )
        assert code == 0 and out == ""
        outputs.append((csv.read_bytes(), svg.read_bytes()))
    assert outputs[0] == outputs[1]


def test_mc_output_identical_across_workers(tmp_path, capsys):
    files = []
    for workers in ("1", "4"):
        dest = tmp_path / f"mc{workers}.json"
        code, _, _ = run(
            capsys, "mc", "--paths", "6000", "--block-size", "1000", "--dt", "0.01",
            "--seed", "5", "--workers", workers, "--out", str(dest),
        )
        assert code == 0
        files.append(dest.read_bytes())
    assert files[0] == files[1]
    result = json.loads(files[0])
    assert result["analytic_value"] == pytest.approx(solve(1.0, DEFAULTS).constrained_value)
    assert result["n_paths"] == 6000


def test_mc_explicit_threshold_has_no_analytic_value(capsys):
    code, out, _ = run(capsys, "mc", "--paths", "500", "--dt", "0.01", "--z", "0.5", "--estimator", "integral")
    assert code == 0
    result = json.loads(out)
    assert result["z"] == 0.5 and result["analytic_value"] is None
    assert result["estimator"] == "integral"


def test_drift_risk(capsys):
    code, out, _ = run(capsys, "drift-risk", "--mu", "0.04", "--sigma", "0.3", "--T", "100")
    assert code == 0
    assert float(out) == pytest.approx(0.0912, abs=1e-4)


def test_config_file_preloads_and_flags_win(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# base case\nmu = 0.02\nlambda=0.1\nformat = json\n")
    code, out, _ = run(capsys, "solve", "--config", str(cfg))
    assert code == 0
    d = json.loads(out)
    assert d["mu"] == 0.02 and d["lambda"] == 0.1
    code, out, _ = run(capsys, "solve", "--config", str(cfg), "--lambda", "0.0")
    assert json.loads(out)["lambda"] == 0.0


def test_read_config_normalises_keys(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("--far_sigmas = 5\nblock-size=10  # trailing comment\n\n")
    assert read_config(cfg) == {"--far-sigmas": "5", "--block-size": "10"}


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "--sigma", "0"],
        ["solve", "--mu", "abc"],
        ["solve", "--format", "xml"],
        ["bogus"],
        [],
        ["sweep", "--vary", "mu", "--from", "0.1", "--to", "0.0"],
        ["sweep", "--from", "0", "--to", "1"],
        ["sweep", "--vary", "kappa", "--from", "0", "--to", "1"],
        ["mc", "--paths", "0"],
        ["mc", "--kappa", "2"],
        ["drift-risk", "--mu", "0.04", "--sigma", "0.3"],
        ["drift-risk", "--mu", "0.04", "--sigma", "0", "--T", "1"],
    ],
)
def test_argument_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_bad_config_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("no equals sign here\n")
    assert run(capsys, "solve", "--config", str(bad))[0] == 2
    bad.write_text("kappa = 3\n")
    assert run(capsys, "solve", "--config", str(bad))[0] == 2
    bad.write_text("mu = fast\n")
    assert run(capsys, "solve", "--config", str(bad))[0] == 2
    assert run(capsys, "solve", "--config", str(tmp_path / "nope.cfg"))[0] == 2


def test_solver_error_exit_1(capsys):
    # zero rate, negative drift and no recall: the value is not finite
    code, _, err = run(capsys, "solve", "--r", "0", "--lambda", "0")
    assert code == 1
    assert "lam > 0" in err


def test_unwritable_output_exit_1(tmp_path, capsys):
    dest = tmp_path / "missing" / "out.csv"
    code, _, err = run(capsys, "sweep", "--vary", "mu", "--from", "0", "--to", "0.01", "--steps", "2", "--csv", str(dest))
    assert code == 1
    assert "missing" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "closeout", "drift-risk", "--mu", "0", "--sigma", "0.3", "--T", "5"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "0.5"
    proc = subprocess.run([sys.executable, "-m", "closeout", "solve", "--x0", "-1"], capture_output=True, check=False)
    assert proc.returncode == 2
