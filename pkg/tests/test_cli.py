import csv
import io
import json
import math

import pytest
from click.testing import CliRunner

from bomber.cli import cli, figure_rows, main
from bomber.io import read_field

SMALL = ["--xmax", "4", "--nx", "81", "--tmax", "1", "--nt", "41"]


@pytest.fixture
def run():
    runner = CliRunner()

    def go(*args):
        return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)
    return go


def test_solve_and_idempotence(run, tmp_path):
    out = tmp_path / "f.bin"
    r = run("solve", "--v", 0.5, *SMALL, "--out", out)
    assert r.exit_code == 0, r.output
    assert "max P at t_max" in r.output
    first = out.read_bytes()
    assert run("solve", "--v", 0.5, *SMALL, "--out", out, "--threads", 3).exit_code == 0
    assert out.read_bytes() == first
    assert read_field(out).v == 0.5


@pytest.mark.parametrize("v", ["0", "-1", "1.5", "abc"])
def test_solve_rejects_bad_v(run, tmp_path, v):
    r = run("solve", "--v", v, "--out", tmp_path / "f.bin")
    assert r.exit_code == 2


def test_solve_rejects_unstable_grid(run, tmp_path):
    r = run("solve", "--v", 1, "--xmax", 4, "--nx", 41, "--tmax", 10, "--nt", 5, "--out", tmp_path / "f.bin")
    assert r.exit_code == 2


def test_solve_discrete(run, tmp_path):
    out = tmp_path / "d.json"
    assert run("solve", "--v", 0.5, *SMALL, "--discrete-step", 1.0, "--out", out).exit_code == 0
    f = read_field(out)
    assert f.mode.label == "discrete:1.0"
    assert all(abs(k - round(k)) < 1e-12 for k in f.K.ravel())


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_boundary(run):
    r = run("boundary", "--v", 1, "--tmin", 0.1, "--tmax", 5, "--steps", 100)
    rows = _rows(r.output)
    assert r.exit_code == 0 and len(rows) == 100
    assert all(row["f_u"] == row["g_u"] for row in rows)
    f = [float(row["f_u"]) for row in rows]
    assert all(b < a for a, b in zip(f, f[1:]))


def test_boundary_case_column(run):
    v = 0.75
    rows = _rows(run("boundary", "--v", v, "--tmin", 0.05, "--tmax", 3, "--steps", 60).output)
    edge = math.log(2 * v) / (1 - v)
    for row in rows:
        assert (row["case"] == "IV") == (float(row["t"]) < edge)
    assert run("boundary", "--v", 1, "--tmin", 2, "--tmax", 1).exit_code == 2


def test_classify(run):
    r = run("classify", "--v", 1, "--x", 0.5, "--t", 1.0)
    assert json.loads(r.output)["verdict"] == "SpendAll"
    assert run("classify", "--v", 1, "--x", 0, "--t", 1.0).exit_code == 2


def test_check(run, tmp_path):
    field = tmp_path / "f.bin"
    run("solve", "--v", 1, *SMALL, "--out", field)
    out = tmp_path / "c.json"
    r = run("check", "--field", field, "--format", "json", "--out", out)
    assert r.exit_code == 0
    reports = json.loads(out.read_text())
    assert [rep["conjecture"] for rep in reports[:3]] == ["A", "B", "C"]
    assert reports[0]["violations"] == [] and reports[2]["violations"] == []
    first = out.read_bytes()
    run("check", "--field", field, "--format", "json", "--out", out)
    assert out.read_bytes() == first
    assert "conjecture A" in run("check", "--field", field).output


def test_asymptotics(run, tmp_path):
    out = tmp_path / "a.csv"
    r = run("asymptotics", "--v", 1, "--rho", 2, "--t", 0.01, "--t", 0.001, "--dx", 0.1, "--out", out)
    assert r.exit_code == 0
    rows = _rows(out.read_text())
    assert len(rows) == 2 and rows[0]["j"] == "1"
    assert run("asymptotics", "--v", 1, "--rho", 2, "--t", 2).exit_code == 2


def test_simulate(run, tmp_path):
    field = tmp_path / "f.bin"
    run("solve", "--v", 1, *SMALL, "--out", field)
    r = run("simulate", "--v", 1, "--x0", 1, "--t0", 0.5, "--field", field, "--trials", 5000,
            "--format", "json")
    assert r.exit_code == 0
    rep = json.loads(r.output)
    assert rep["trials"] == 5000 and rep["policy"].startswith("FromField")
    again = run("simulate", "--v", 1, "--x0", 1, "--t0", 0.5, "--field", field, "--trials", 5000,
                "--format", "json", "--threads", 4)
    assert again.output == r.output
    assert run("simulate", "--v", 1, "--x0", 9, "--t0", 0.5, "--field", field).exit_code == 2
    assert run("simulate", "--v", 1, "--x0", 1, "--t0", 0.5).exit_code == 2
    r = run("simulate", "--v", 0.5, "--x0", 1, "--t0", 0.5, "--policy", "two-stage", "--trials", 1000)
    assert r.exit_code == 0 and "TwoStage" in r.output


def test_figure(run, tmp_path):
    out, edges = tmp_path / "fig.csv", tmp_path / "edges.csv"
    t = 1e-4
    r = run("figure", "--t", t, "--xmax", 100, "--steps", 2001, "--out", out, "--edges-out", edges)
    assert r.exit_code == 0
    L = -math.log(t)
    marks = _rows(edges.read_text())
    assert [int(m["j"]) for m in marks] == [1, 2, 3, 4]
    for m, c in zip(marks, [1, 3, 6, 10]):
        assert float(m["x"]) == pytest.approx(L * c, rel=1e-15)
    rows = [(float(r["x"]), int(r["j"]), float(r["K_asym"])) for r in _rows(out.read_text())]
    assert all(k == x for x, j, k in rows if j == 1)
    for (x0, _, k0), (x1, _, k1) in zip(rows, rows[1:]):
        assert abs(k1 - k0) <= (x1 - x0) + 1e-9     # slope 1/j never exceeds one
    # continuity straddling each edge
    for j, x in figure_rows(t, 0, 100, 3)[1]:
        left = figure_rows(t, x * (1 - 1e-12), x * (1 - 1e-12) + 1, 2)[0][0]
        right = figure_rows(t, x * (1 + 1e-12), x * (1 + 1e-12) + 1, 2)[0][0]
        assert abs(left[3] - right[3]) < 1e-6 * x
    assert run("figure", "--t", 1.0).exit_code == 2


def test_config_file(run, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nv = 1\ntmin=0.5\ntmax = 1\nsteps=3\n")
    r = run("--config", cfg, "boundary")
    assert r.exit_code == 0 and len(_rows(r.output)) == 3
    r = run("--config", cfg, "boundary", "--steps", 5)
    assert len(_rows(r.output)) == 5


def test_main_returns_exit_code(capsys):
    assert main(["classify", "--v", "1", "--x", "1", "--t", "1"]) == 0
    assert main(["classify", "--v", "0", "--x", "1", "--t", "1"]) == 2
