import csv
import os
import subprocess
import sys

import pytest

from relaxlab.cli import main

BASE = """\
[model]
name = {model}

[grid]
cells = 32

[time]
t_end = 0.05
outputs = 4

[study]
eps_list = 1e-1, 3.16e-2, 1e-2
floor_grid_factor = 2
slope_threshold = 0.5

[run]
samples = 400
"""


@pytest.fixture
def config(tmp_path):
    def make(model="elasticity", extra=""):
        path = tmp_path / f"{model}.ini"
        path.write_text(BASE.format(model=model) + extra)
        return str(path)
    return make


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("model,rows", [("elasticity", 9), ("combustion", 8),
                                        ("symmetric", 8)])
def test_validate_passes(config, tmp_path, model, rows, capsys):
    out = tmp_path / "v"
    assert main(["validate", config(model), "--output-dir", str(out)]) == 0
    table = read_rows(out / "hypotheses.csv")
    assert len(table) == rows and all(r["passed"] == "1" for r in table)
    assert list(table[0]) == ["hypothesis", "passed", "worst_violation", "threshold",
                              "samples_used", "witness"]
    assert (out / "summary.txt").read_text().rstrip().endswith("PASS")
    assert "result" in capsys.readouterr().out


def test_validate_failure_exits_2(config, tmp_path):
    out = tmp_path / "v"
    code = main(["validate", config(), "--output-dir", str(out), "--override", "run.tol=1e-20"])
    assert code == 2
    assert any(r["passed"] == "0" for r in read_rows(out / "hypotheses.csv"))


def test_run_writes_snapshots_and_series(config, tmp_path):
    out = tmp_path / "r"
    assert main(["run", config("combustion"), "--output-dir", str(out)]) == 0
    snaps = sorted(os.listdir(out / "snapshots"))
    assert snaps == ["t0.0125.csv", "t0.025.csv", "t0.0375.csv", "t0.05.csv", "t0.csv"]
    header = (out / "snapshots" / "t0.05.csv").read_text().splitlines()[0]
    assert header == "x,v,u,Z,alpha"
    assert read_rows(out / "series.csv")[0]["t"] == "0"
    assert "entropy" in (out / "summary.txt").read_text()


def test_run_is_byte_identical(config, tmp_path):
    cfg = config("symmetric")
    for d in ("a", "b"):
        assert main(["run", cfg, "--output-dir", str(tmp_path / d)]) == 0
    for rel in ("series.csv", "snapshots/t0.05.csv", "summary.txt"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_float_format_round_trips(config, tmp_path):
    out = tmp_path / "r"
    main(["run", config(), "--output-dir", str(out)])
    for line in (out / "snapshots" / "t0.05.csv").read_text().splitlines()[1:]:
        for tok in line.split(","):
            assert float(repr(float(tok))) == float(tok)
            assert len(tok.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 17


def test_usage_and_config_errors_exit_1(config, tmp_path, capsys):
    assert main(["run", config(extra="[time]\n"), "--output-dir", str(tmp_path)]) == 1
    assert main(["run", config(), "--override", "time.t_end=-1"]) == 1
    assert "t_end > 0" in capsys.readouterr().err
    assert main(["simulate", config()]) == 1
    assert main(["run", str(tmp_path / "missing.ini")]) == 1
    assert main([]) == 1


def test_study_exit_codes(config, tmp_path):
    out = tmp_path / "s"
    assert main(["study", config(), "--output-dir", str(out)]) == 0
    rows = read_rows(out / "convergence.csv")
    assert [float(r["eps"]) for r in rows] == [1e-1, 3.16e-2, 1e-2]
    assert list(rows[0]) == ["eps", "sup_Hr", "sup_L2", "floor", "used"]
    first = (out / "convergence.csv").read_bytes()
    assert main(["study", config(), "--output-dir", str(out),
                 "--override", "study.slope_threshold=5"]) == 3
    assert (out / "convergence.csv").read_bytes() == first
    # every eps below the discretization floor
    code = main(["study", config(), "--output-dir", str(tmp_path / "x"),
                 "--override", "eps_list=1e-6, 1e-7"])
    assert code == 3
    assert "study failed" in (tmp_path / "x" / "summary.txt").read_text()


def test_module_entry_point(config, tmp_path):
    out = tmp_path / "m"
    proc = subprocess.run([sys.executable, "-m", "relaxlab", "validate", config(),
                           "--output-dir", str(out), "--override", "samples=50"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "finished in" in proc.stderr and "finished" not in proc.stdout
