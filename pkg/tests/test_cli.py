import csv
import subprocess
import sys

import pytest

from starisac.ao import TRACE_COLUMNS
from starisac.cli import main
from starisac.scenario import desk_scenario, serialize


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "scenario.ini"
    path.write_text(serialize(desk_scenario(N=8, Q_max=30)))
    return path


def test_run_writes_trace(config, tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    assert main(["run", "--config", str(config), "--mode", "eed", "--seed", "3",
                 "--trace", str(trace)]) == 0
    out = capsys.readouterr().out
    assert "mode EED  seed 3" in out
    rows = list(csv.reader(trace.open()))
    assert rows[0] == TRACE_COLUMNS
    iters = int(out.split("iterations ")[1].split()[0])
    assert len(rows) == 1 + iters


def test_run_defaults(capsys):
    assert main(["run", "--seed", "1"]) == 0
    assert "sum_rate_bps_hz" in capsys.readouterr().out


def test_run_infeasible_exit_code(tmp_path, capsys):
    path = tmp_path / "hard.ini"
    path.write_text(serialize(desk_scenario(N=8, Gamma_t_dB=90.0)))
    assert main(["run", "--config", str(path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_run_bad_config(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[scenario]\nM = 0\nN = 4\nK_r = 1\nK_t = 1\n")
    assert main(["run", "--config", str(path)]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.ini")]) == 2
    assert "error:" in capsys.readouterr().err


def test_sweep(tmp_path, capsys):
    spec = tmp_path / "spec.ini"
    spec.write_text("[sweep]\nparameter = total_power_dBm\nvalues = 20 26\nmodes = UED PASSIVE\n"
                    "trials = 2\n[scenario]\nM = 2\nN = 4\nK_r = 1\nK_t = 1\n")
    out = tmp_path / "out"
    assert main(["sweep", "--spec", str(spec), "--out", str(out), "--jobs", "1"]) == 0
    assert (out / "results.csv").exists() and (out / "summary.csv").exists()
    assert "median" in capsys.readouterr().out


def test_sweep_flags_failed_trials(tmp_path):
    spec = tmp_path / "spec.ini"
    spec.write_text("[sweep]\nparameter = Gamma_t_dB\nvalues = 90\nmodes = UED\ntrials = 1\n"
                    "[scenario]\nM = 2\nN = 4\nK_r = 1\nK_t = 1\n")
    assert main(["sweep", "--spec", str(spec), "--out", str(tmp_path / "o")]) == 1


def test_selftest_module_entry():
    res = subprocess.run([sys.executable, "-m", "starisac", "selftest"], capture_output=True, text=True)
    assert res.returncode == 0, res.stdout + res.stderr
    assert res.stdout.count("PASS") >= 8 and "FAIL" not in res.stdout
