import csv
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import pytest

from fracwave import io as fio
from fracwave.cli import main
from fracwave.mittag_leffler import ml
from fracwave.volterra import StepSizeWarning

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# --- ml ----------------------------------------------------------------------

@pytest.mark.parametrize("argv, value", [
    (["1", "1", "-1", "0"], 0.3678794412),
    (["1.5", "1.5", "0", "0"], 1.1283791671),
    (["2", "1", "-2.4674011", "0"], 0.0),
])
def test_ml_examples(argv, value, capsys):
    assert main(["ml", *argv]) == 0
    out = capsys.readouterr().out.splitlines()
    assert float(out[0]) == pytest.approx(value, abs=1e-9)
    assert out[1].startswith("branch ")
    assert float(out[2].split()[1]) <= 1e-8


def test_ml_reports_branch_and_handles_negative_arguments(capsys):
    assert main(["ml", "1.8", "1", "-1e4"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[1] == "branch asymptotic"
    assert float(out[0]) < 0


def test_ml_bad_parameters(capsys):
    assert main(["ml", "-1", "1", "0"]) == 2
    assert main(["ml", "1.5", "x", "0"]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fracwave", "ml", "1", "1", "-1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("0.367879441171")


# --- solve -------------------------------------------------------------------

def test_solve_without_forcing_matches_closed_form(tmp_path):
    out = tmp_path / "free"
    assert main(["solve", "--config", str(CONFIGS / "linear_free.ini"), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    t = 2.0
    c0 = ml(1.5, 1.0, -t ** 1.5).real
    c1 = 0.5 * t * ml(1.5, 2.0, -4.0 * t ** 1.5).real
    assert summary["final_l2_norm"] == pytest.approx(math.hypot(c0, c1), abs=1e-8)
    assert not summary["blown"] and summary["t_flag"] is None
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 51 and float(rows[-1]["t"]) == 2.0
    assert len((out / "snapshots.csv").read_text().splitlines()) == 4


def test_solve_zero_data(tmp_path):
    out = tmp_path / "zero"
    assert main(["solve", "--config", str(CONFIGS / "zero_data.ini"), "--out", str(out)]) == 0
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(float(r["l2_norm"]) == 0.0 for r in rows)


def test_solve_blowup_exit_code(tmp_path):
    out = tmp_path / "blow"
    assert main(["solve", "--config", str(CONFIGS / "exwave_blowup.ini"), "--out", str(out)]) == 10
    summary = json.loads((out / "summary.json").read_text())
    assert summary["blown"] and 0 < summary["t_flag"] < 3.0


def test_solve_config_errors(tmp_path):
    bad_key = write(tmp_path, "a.ini", "[solver]\nalpah = 1.5\n")
    bad_section = write(tmp_path, "b.ini", "[solvr]\nalpha = 1.5\n")
    bad_value = write(tmp_path, "c.ini", "[solver]\nalpha = 2.5\n")
    bad_mode = write(tmp_path, "d.ini", "[data]\nu0 = 99:1\n")
    for path in (bad_key, bad_section, bad_value, bad_mode, str(tmp_path / "missing.ini")):
        assert main(["solve", "--config", path, "--out", str(tmp_path / "o")]) == 2


def test_solve_admissibility_gate(tmp_path):
    cfg = write(tmp_path, "adm.ini",
                "[domain]\ndimension = 2\ngrid = 8\nmodes = 4\n[solver]\nsteps = 2\n"
                "[nonlinearity]\nexponent = 5.0\n")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    with pytest.warns(StepSizeWarning, match="admissible"):
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o"), "--override-admissibility"]) == 0


def test_solve_picard_failure_exit_code(tmp_path):
    cfg = write(tmp_path, "pf.ini",
                "[solver]\nsteps = 4\npicard_max_iters = 1\npicard_tol = 1e-14\n[data]\nu0 = 0:3\n")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == 4


def test_solve_is_deterministic(tmp_path):
    cfg = write(tmp_path, "r.ini", "[solver]\nsteps = 10\n[data]\nu0 = random\nu1 = random\nseed = 4\n")
    main(["solve", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["solve", "--config", cfg, "--out", str(tmp_path / "b")])
    for name in ("trajectory.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# --- experiment --------------------------------------------------------------

def test_experiment_convergence(tmp_path, capsys):
    out = tmp_path / "conv"
    assert main(["experiment", "convergence", "--config", str(CONFIGS / "convergence.ini"), "--out", str(out)]) == 0
    summary = json.loads((out / "convergence.json").read_text())
    assert summary["fail_count"] == 0
    assert all(r["order"] is None or r["order"] >= 0.9 for r in summary["results"])
    assert "4 passed, 0 failed" in capsys.readouterr().out


def test_experiment_config_errors(tmp_path):
    empty = write(tmp_path, "e.ini", "[experiment]\nkind = rates\nalphas =\n")
    assert main(["experiment", "rates", "--config", empty, "--out", str(tmp_path / "o")]) == 2
    wrong = write(tmp_path, "w.ini", "[experiment]\nkind = blowup\n")
    assert main(["experiment", "rates", "--config", wrong, "--out", str(tmp_path / "o")]) == 2
    nosec = write(tmp_path, "n.ini", "[solver]\nsteps = 4\n")
    assert main(["experiment", "rates", "--config", nosec, "--out", str(tmp_path / "o")]) == 2


def test_experiment_failures_exit_one(tmp_path):
    # an impossible slope tolerance turns every cell into a failure
    cfg = write(tmp_path, "f.ini", "[experiment]\nkind = rates\nalphas = 1.5\nbetas = 0\nthetas = 0\n"
                                   "families = S\nslope_tol = 1e-9\n")
    assert main(["experiment", "rates", "--config", cfg, "--out", str(tmp_path / "o")]) == 1


def test_usage_errors():
    assert main([]) == 2
    assert main(["experiment", "nonsense"]) == 2
    assert main(["solve", "--config", "x.ini", "--threads", "-1"]) == 2


# --- output plumbing ---------------------------------------------------------

def test_number_format():
    assert fio.fmt(1 / 3) == "0.333333333333"
    assert fio.fmt(True) == "1"
    assert fio.fmt(1e-20) == "1e-20"


def test_atomic_write_leaves_no_partial_file(tmp_path, monkeypatch):
    target = tmp_path / "out.csv"
    target.write_text("old\n")

    def broken(*args, **kwargs):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", broken)
    with pytest.raises(OSError):
        fio.write_csv(target, ["a"], [[1.0]])
    assert target.read_text() == "old\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]
