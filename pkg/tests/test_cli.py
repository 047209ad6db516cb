import csv
import subprocess
import sys

import pytest

from fdelectro.cli import EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, main


def _header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


def test_poisson_outputs(tmp_path):
    out, trace = tmp_path / "s.csv", tmp_path / "t.csv"
    assert main(["poisson", "--test", "1", "--n", "6", "--out", str(out), "--trace", str(trace)]) == EXIT_OK
    assert _header(out) == ["n", "h", "err_D_l2", "err_D_inf", "err_E_inf", "sweeps", "wall_time_s"]
    assert _header(trace) == ["sweep", "energy", "max_eta", "shift_norm", "gauss_residual_inf"]


def test_pb_outputs(tmp_path):
    out, trace = tmp_path / "s.csv", tmp_path / "t.csv"
    code = main(["pb", "--n", "4", "--interleave", "off", "--out", str(out), "--trace", str(trace)])
    assert code == EXIT_OK
    assert _header(out)[5:9] == ["err_c1_l2", "err_c1_inf", "err_c2_l2", "err_c2_inf"]
    assert _header(trace) == ["sweep", "energy", "max_eta", "max_zeta", "shift_norm", "gauss_residual_inf"]


def test_convergence(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["convergence", "--test", "2", "--n", "4", "6", "--shift", "on", "--out", str(out)]) == EXIT_OK
    with open(out) as fh:
        assert len(list(csv.reader(fh))) == 3
    assert "order err_D_l2" in capsys.readouterr().out


def test_not_converged():
    assert main(["poisson", "--n", "6", "--max-sweeps", "3"]) == EXIT_NOT_CONVERGED


@pytest.mark.parametrize("argv", [
    [],
    ["poisson", "--test", "3"],
    ["pb", "--test", "1"],
    ["poisson", "--shift", "maybe"],
    ["poisson", "--tol", "-1"],
    ["poisson", "--n", "0"],
    ["poisson", "--n", "1"],
    ["convergence"],
    ["convergence", "--test", "1", "--n", "8"],
    ["convergence", "--test", "1", "--n", "8", "8"],
    ["convergence", "--test", "1", "--n", "2", "8"],
    ["frobnicate"],
])
def test_usage_errors(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fdelectro.cli", "poisson", "--bogus"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
    proc = subprocess.run([sys.executable, "-m", "fdelectro.cli", "poisson", "--n", "4"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_OK and "N=4" in proc.stdout
