import json
import math

import numpy as np
import pytest

from tsslab.cli import main
from tsslab.diagnostics import COLUMNS, Trajectory
from tsslab.hausdorff import CONSISTENT, INCONCLUSIVE

from conftest import DATA, REGRESSION_CFG

FIXTURE = DATA / "regression_trajectory.csv"


def _run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out if capsys is not None else None
    return code, out


def _close(a, b, rtol=1e-9):
    if isinstance(a, dict):
        assert a.keys() == b.keys()
        for k in a:
            _close(a[k], b[k], rtol)
    elif isinstance(a, float) or isinstance(b, float):
        assert a == pytest.approx(b, rel=rtol, abs=1e-15)
    else:
        assert a == b


@pytest.fixture
def riccati_csv(tmp_path):
    # y' = y^3 with y(0) = 1, exact until the blow-up time 1/2
    t = np.arange(0, 0.4 + 1e-12, 1e-4)
    y = (1 - 2 * t) ** -0.5
    path = tmp_path / "riccati.csv"
    Trajectory.from_arrays(t, y=y).to_csv(path)
    return path


class TestSimulate:
    def test_reproducible_output(self, tmp_path, capsys):
        for name in ("a", "b"):
            code, out = _run(["simulate", "--config", REGRESSION_CFG, "--set", "T=0.05",
                              "--output", tmp_path / name], capsys)
            assert code == 0 and "ok" in out
        for f in ("trajectory.csv", "final.txt", "config.cfg"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        ra, rb = (json.loads((tmp_path / n / "report.json").read_text()) for n in "ab")
        ra.pop("output_dir"), rb.pop("output_dir")
        assert ra == rb
        header = next(line for line in (tmp_path / "a" / "trajectory.csv").read_text().splitlines()
                      if not line.startswith("#"))
        assert set(COLUMNS) <= set(header.split(","))
        report = json.loads((tmp_path / "a" / "report.json").read_text())
        assert report["status"] == "ok" and report["violation_count"] == 0

    def test_output_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TSSLAB_OUTPUT_ROOT", str(tmp_path))
        assert main(["simulate", "--config", str(REGRESSION_CFG), "--set", "T=0.01"]) == 0
        runs = list(tmp_path.glob("run-*"))
        assert len(runs) == 1 and (runs[0] / "trajectory.csv").is_file()

    def test_gnuplot(self, tmp_path):
        assert main(["simulate", "--config", str(REGRESSION_CFG), "--set", "T=0.01",
                     "--output", str(tmp_path), "--gnuplot"]) == 0
        assert (tmp_path / "trajectory.dat").read_text().startswith("# t ")

    def test_grid_too_small(self, tmp_path, capsys):
        code = main(["simulate", "--config", str(REGRESSION_CFG), "--set", "grid=8", "--output", str(tmp_path)])
        assert code == 1
        assert "grid" in capsys.readouterr().err

    def test_bad_config_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("dims = 2\ngrid = 32\nthis line is junk\n")
        assert main(["simulate", "--config", str(cfg)]) == 1
        assert "line 3" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 1

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blow_up_exit_code(self, tmp_path):
        code = main(["simulate", "--config", str(REGRESSION_CFG), "--set", "dt=1.0", "--set", "T=40",
                     "--set", "initial=gaussian-bump(mass=200, width=0.8)", "--output", str(tmp_path)])
        assert code == 2
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["status"] == "blow-up"
        assert len(Trajectory.from_csv(tmp_path / "trajectory.csv")) >= 1


class TestAnalyze:
    def test_fixture(self, tmp_path):
        out = tmp_path / "a.json"
        assert main(["analyze", str(FIXTURE), "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["command"] == "analyze"
        assert abs(report["mass_drift"]) <= 1e-10

    def test_missing_file(self, tmp_path):
        assert main(["analyze", str(tmp_path / "none.csv")]) == 1


class TestVerifyOdi:
    def test_constant_series(self, tmp_path, capsys):
        path = tmp_path / "flat.csv"
        t = np.linspace(0, 1, 101)
        Trajectory.from_arrays(t, y=np.full_like(t, 3.0)).to_csv(path)
        code, out = _run(["verify-odi", path], capsys)
        report = json.loads(out)
        assert code == 0 and report["K_emp"] == 0.0
        assert any("term constants" in o for o in report["omitted"])

    def test_riccati(self, riccati_csv, capsys):
        code, out = _run(["verify-odi", riccati_csv, "--sigma", "3"], capsys)
        assert code == 0
        assert 0.99 <= json.loads(out)["K_emp"] <= 1.01

    def test_golden(self, tmp_path):
        out = tmp_path / "v.json"
        assert main(["verify-odi", str(FIXTURE), "--out", str(out)]) == 0
        got = json.loads(out.read_text())
        want = json.loads((DATA / "verify_odi_golden.json").read_text())
        got.pop("trajectory"), want.pop("trajectory")
        _close(got, want)

    def test_rational_exponents(self, riccati_csv, capsys):
        code, out = _run(["verify-odi", riccati_csv, "--p", "5/2", "--alpha", "3/4"], capsys)
        assert code == 0
        assert "exact" in json.loads(out)["exponents"]
        assert main(["verify-odi", str(riccati_csv), "--alpha", "1/2"]) == 3

    def test_strict_json(self, riccati_csv, capsys):
        _, out = _run(["verify-odi", riccati_csv], capsys)
        json.loads(out, parse_constant=lambda c: pytest.fail(f"non-strict JSON constant {c}"))


class TestEstimateDimension:
    def test_header(self, tmp_path, capsys):
        code, out = _run(["estimate-dimension", FIXTURE, "--out", tmp_path / "e.json"], capsys)
        assert code == 0
        assert out.splitlines()[0].startswith("d = 0.5 ")

    def test_golden(self, tmp_path):
        out = tmp_path / "e.json"
        assert main(["estimate-dimension", str(FIXTURE), "--out", str(out)]) == 0
        got = json.loads(out.read_text())
        want = json.loads((DATA / "estimate_dimension_golden.json").read_text())
        got.pop("trajectory"), want.pop("trajectory")
        _close(got, want)
        assert got["header"]["d_exact"] == "1/2"
        assert all(r["premeasure"] == 0 for r in got["premeasure_table"])

    def test_inapplicable(self, capsys):
        assert main(["estimate-dimension", str(FIXTURE), "--s", "2", "--a", "2"]) == 3
        assert "a > s" in capsys.readouterr().err

    def test_gnuplot_table(self, tmp_path):
        path = tmp_path / "p.dat"
        assert main(["estimate-dimension", str(FIXTURE), "--gnuplot", str(path)]) == 0
        assert len(path.read_text().splitlines()) == 6

    @pytest.mark.parametrize("d,expected", [(0.4, INCONCLUSIVE), (0.9, CONSISTENT)])
    def test_cantor(self, tmp_path, capsys, d, expected):
        path = tmp_path / "cantor.csv"
        assert main(["synth", "--out", str(path), "--h", "1e-5", "--beta", "2", "--cap", "1e10",
                     "--cantor-level", "8"]) == 0
        deltas = [0.5 / 9 * 0.5**k for k in range(5)]
        capsys.readouterr()
        code, out = _run(["estimate-dimension", path, "--C", "1", "--d", d, "--deltas", *deltas], capsys)
        assert code == 0
        assert json.loads(out)["verdict"] == expected


class TestSweepEpsilon:
    def test_needs_two_values(self, tmp_path):
        assert main(["sweep-epsilon", "--config", str(REGRESSION_CFG), "--eps", "0.1",
                     "--output", str(tmp_path)]) == 1

    def test_identical_members(self, tmp_path, capsys):
        code, _ = _run(["sweep-epsilon", "--config", REGRESSION_CFG, "--set", "T=0.02",
                        "--eps", "0.1", "0.1", "--output", tmp_path], capsys)
        assert code == 0
        report = json.loads((tmp_path / "sweep.json").read_text())
        (pair,) = report["pairs"]
        assert pair["y_sup"] == 0 and pair["n_sup"] == 0 and pair["u_sup"] == 0
        assert report["complete"]


class TestSynth:
    def test_writes_trajectory(self, tmp_path):
        path = tmp_path / "s.csv"
        assert main(["synth", "--out", str(path), "--h", "1e-3", "--points", "0.5", "--cap", "100"]) == 0
        traj = Trajectory.from_csv(path)
        assert float(traj.metadata["cap"]) == 100.0
        assert traj["z"].max() == 100.0 and len(traj) == 1001

    def test_certificate_refused(self, tmp_path):
        assert main(["synth", "--out", str(tmp_path / "s.csv"), "--points", "0.5",
                     "--beta", "0.6", "--s", "2"]) == 3

    def test_unknown_command(self):
        assert main(["frobnicate"]) == 1
        assert main([]) == 1
