import csv
import io
import json
import os
import subprocess
import sys

import pytest

from cohortkit import cli
from cohortkit.distribution import (
    ForwardDistribution,
    backward_pmf,
    backward_pmf_table,
    forward_pmf,
    forward_pmf_table,
    make_backward_posterior,
)
from cohortkit.life_table import bundled_life_table, load_life_table
from cohortkit.projection import CohortState, cv_sweep, project_backward, project_forward
from cohortkit.simulation import SimConfig, simulate_forward


@pytest.fixture
def table_file(tmp_path):
    path = tmp_path / "lt.csv"
    path.write_text("age,survival\n0,1.0\n10,0.64\n")
    return str(path)


def run(capsys, *argv):
    status = cli.main(list(argv))
    out, err = capsys.readouterr()
    return status, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_project(capsys, table_file):
    status, out, _ = run(capsys, "project", "--life-table", table_file,
                         "--age", "0", "--count", "1000", "--tau", "10")
    assert status == 0
    (row,) = rows(out)
    est = project_forward(load(table_file), CohortState(0.0, 0.0, 1000.0), 10.0)
    assert float(row["mean"]) == est.mean == 640
    assert float(row["variance"]) == est.variance
    assert float(row["variance"]) == pytest.approx(230.4, rel=1e-14)
    assert float(row["cv"]) == est.cv


def load(path):
    with open(path) as fh:
        return load_life_table(fh)


def test_backproject(capsys, table_file):
    status, out, _ = run(capsys, "backproject", "--life-table", table_file,
                         "--age", "10", "--count", "640", "--tau", "10", "--year", "2010")
    assert status == 0
    (row,) = rows(out)
    est = project_backward(load(table_file), CohortState(10.0, 2010.0, 640.0), 10.0)
    assert float(row["mean"]) == est.mean
    assert float(row["variance"]) == est.variance
    assert float(row["target_year"]) == 2000


def test_dist_backward_single(capsys):
    status, out, _ = run(capsys, "dist", "backward", "--n", "8", "--p", "0.8", "--m", "8")
    assert status == 0
    (row,) = rows(out)
    value = float(row["probability"])
    assert value == backward_pmf(make_backward_posterior(8, 0.8), 8)
    assert value == pytest.approx(0.135335, abs=5e-7)


def test_dist_tables(capsys):
    _, out, _ = run(capsys, "dist", "forward", "--N", "30", "--p", "0.3", "--all")
    table = forward_pmf_table(ForwardDistribution(30, 0.3))
    assert [float(r["probability"]) for r in rows(out)] == table.tolist()
    _, out, _ = run(capsys, "dist", "forward", "--N", "30", "--p", "0.3", "--m", "9")
    assert float(rows(out)[0]["probability"]) == forward_pmf(ForwardDistribution(30, 0.3), 9)
    _, out, _ = run(capsys, "dist", "backward", "--n", "5", "--p", "0.5")
    support, pmf = backward_pmf_table(make_backward_posterior(5, 0.5))
    got = rows(out)
    assert [int(r["m"]) for r in got] == support.tolist()
    assert [float(r["probability"]) for r in got] == pmf.tolist()


def test_sweep_backward_bound(capsys, tmp_path):
    ratio = tmp_path / "ratio.csv"
    status, out, err = run(capsys, "sweep", "--life-table", cli.BUILTIN_TABLE, "--count", "1e6",
                           "--direction", "backward", "--ratio-out", str(ratio), "--summary")
    assert status == 0
    got = rows(out)
    assert max(float(r["factor"]) for r in got) <= 0.5
    lib = cv_sweep(bundled_life_table(), N=1e6, direction="backward")
    assert [float(r["cv"]) for r in got] == [r.cv for r in lib]
    summary = json.loads(err)
    assert summary["max_factor"] == max(r.factor for r in lib)
    assert rows(ratio.read_text())[0].keys() == {"x", "tau", "v1", "v2", "ratio"}


def test_ladder(capsys, tmp_path):
    s = tmp_path / "s.csv"
    s.write_text("age,count\n105,10\n110,5\n115,1\n")
    status, out, _ = run(capsys, "ladder", "--life-table", cli.BUILTIN_TABLE, "--structure", str(s),
                         "--steps", "1", "--direction", "forward")
    assert status == 0
    statuses = [(r["step"], r["age"], r["status"]) for r in rows(out)]
    assert ("1", "110.0", "projected") in statuses
    assert ("1", "120.0", "dropped") in statuses


def test_simulate(capsys):
    status, out, _ = run(capsys, "simulate", "forward", "--N", "20", "--p", "0.4",
                         "--seed", "3", "--replications", "500")
    assert status == 0
    report = json.loads(out)
    lib = simulate_forward(SimConfig(seed=3, replications=500), 20, 0.4)
    assert report["total_variation_distance"] == lib.total_variation_distance
    assert report["parameters"]["direction"] == "forward"


def test_out_is_atomic(capsys, tmp_path, table_file):
    target = tmp_path / "out.csv"
    status, out, _ = run(capsys, "project", "--life-table", table_file, "--age", "0",
                         "--count", "10", "--tau", "5", "--out", str(target))
    assert status == 0 and out == ""
    assert rows(target.read_text())[0]["direction"] == "forward"

    missing = tmp_path / "missing.csv"
    status, _, err = run(capsys, "project", "--life-table", table_file, "--age", "0",
                         "--count", "10", "--tau", "50", "--out", str(missing))
    assert status == 1
    assert not missing.exists()
    assert not [f for f in os.listdir(tmp_path) if f.endswith(".tmp")]
    assert json.loads(err)["error"] == "DomainError"


@pytest.mark.parametrize("argv, kind, status", [
    (["project", "--life-table", "/nonexistent.csv", "--age", "0", "--count", "1", "--tau", "1"],
     "FileNotFoundError", 1),
    (["project", "--wat"], "UsageError", 2),
    (["frobnicate"], "UsageError", 2),
    (["dist", "forward", "--p", "0.5"], "UsageError", 2),
    (["dist", "backward", "--n", "3.5", "--p", "0.5"], "DomainError", 1),
    (["simulate", "backward", "--n", "50", "--p", "0.5", "--seed", "1", "--replications", "5000",
      "--max-attempts", "100", "--min-accepted", "1000"], "AcceptanceStarvation", 1),
])
def test_errors_single_line(capsys, argv, kind, status):
    code, out, err = run(capsys, *argv)
    assert code == status
    assert out == ""
    assert err.count("\n") == 1
    assert json.loads(err)["error"] == kind


def test_bad_life_table(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("age,survival\n0,1.0\n50,0.9\n100,0.95\n")
    code, _, err = run(capsys, "sweep", "--life-table", str(bad), "--count", "10", "--direction", "forward")
    assert code == 1 and json.loads(err)["error"] == "LifeTableError"


def test_module_entry_point(table_file):
    proc = subprocess.run(
        [sys.executable, "-m", "cohortkit", "project", "--life-table", table_file,
         "--age", "0", "--count", "1000", "--tau", "10"],
        capture_output=True, text=True, check=True,
    )
    assert rows(proc.stdout)[0]["mean"] == "640.0"
