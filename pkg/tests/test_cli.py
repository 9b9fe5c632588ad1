import json
import math
import os

import numpy as np
import pytest

from basicvar.cli import main

SPEC = {"type": "kirchhoff", "p": 2, "r": 2, "lambda": 1.0,
        "weight": {"kind": "power", "exponent": 0}}


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(SPEC))
    return str(path)


def run(args):
    return main(args)


class TestModelsAndGeometry:
    def test_models_listing(self, capsys):
        assert run(["models"]) == 0
        out = capsys.readouterr().out
        assert "flat-torus-3" in out and "clifford" in out
        assert "19.7392088" in out            # three-sphere volume
        lines = [l for l in out.splitlines() if "latitude-2" in l]
        assert lines and "no" in lines[0]     # flagged ineligible

    def test_geometry_clifford_passes(self, capsys):
        assert run(["geometry", "--model", "clifford"]) == 0
        out = capsys.readouterr().out
        assert "[FAIL]" not in out
        assert "leaf-volume-asymptotics" in out

    def test_geometry_unknown_model(self, capsys):
        assert run(["geometry", "--model", "nope"]) == 2
        err = capsys.readouterr().err
        assert json.loads(err)["error"]["type"] == "usage"

    def test_geometry_corrupt_custom_model(self, tmp_path, capsys):
        ts = np.linspace(0.0, math.pi / 2, 41)
        v = 4.0 * math.pi ** 2 * np.cos(ts) * np.sin(ts)
        payload = {
            "name": "corrupt", "n": 3, "d_star": 1,
            "domain": {"kind": "interval", "T": math.pi / 2,
                       "endpoints": [{"kind": "singular-leaf", "order": 2},
                                     {"kind": "singular-leaf", "order": 1}]},
            "density_samples": [[float(t), float(x)] for t, x in zip(ts, v)],
        }
        path = tmp_path / "corrupt.json"
        path.write_text(json.dumps(payload))
        assert run(["geometry", "--model", f"custom:{path}"]) == 4


class TestSolveVerifyRoundTrip:
    def test_pipeline(self, tmp_path, spec_file, capsys):
        out_dir = str(tmp_path)
        code = run(["solve", "--model", "flat-torus-3", "--spec", spec_file,
                    "--eps", "1.0", "--grid", "401", "--out", "sol.json",
                    "--csv", "sol.csv", "--plot", "--out-dir", out_dir])
        assert code == 0
        sol_path = tmp_path / "sol.json"
        payload = json.loads(sol_path.read_text())
        assert payload["converged"]
        assert payload["residuals"]["tangent"] <= 1e-10
        assert (tmp_path / "sol.csv").exists()
        assert (tmp_path / "sol_profile.png").exists()
        manifest = json.loads((tmp_path / "sol.manifest.json").read_text())
        assert any(p.endswith("sol.json") for p in manifest["outputs"])

        # the solution file is accepted unchanged by verification
        code = run(["verify", "--solution", str(sol_path),
                    "--full-grid", "101,16,16", "--dirs", "4", "--seed", "2",
                    "--out", "report.json", "--out-dir", out_dir])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["passed"]
        assert report["basic_deviation_of_gradient"] <= 1e-12

    def test_solve_usage_errors(self, tmp_path, spec_file):
        assert run(["solve", "--model", "flat-torus-3", "--spec", spec_file,
                    "--eps", "-1.0", "--out-dir", str(tmp_path)]) == 2
        assert run(["solve", "--model", "latitude-2", "--spec", spec_file,
                    "--eps", "1.0", "--out-dir", str(tmp_path)]) == 2

    def test_verify_spec_digest_guard(self, tmp_path, spec_file):
        out_dir = str(tmp_path)
        run(["solve", "--model", "flat-torus-3", "--spec", spec_file,
             "--eps", "1.0", "--grid", "201", "--out", "sol.json",
             "--out-dir", out_dir])
        other = dict(SPEC, lambda_=2.0)
        other["lambda"] = 2.0
        other_path = tmp_path / "other.json"
        other_path.write_text(json.dumps(other))
        assert run(["verify", "--solution", str(tmp_path / "sol.json"),
                    "--spec", str(other_path), "--full-grid", "65,8,8",
                    "--out-dir", out_dir]) == 2


class TestSweep:
    def test_summary_and_figures(self, tmp_path, spec_file):
        out_dir = str(tmp_path)
        code = run(["sweep", "--model", "flat-torus-3", "--spec", spec_file,
                    "--eps", "0.5,1,2,4,8", "--grid", "201", "--workers", "2",
                    "--plot", "--out-dir", out_dir])
        assert code == 0
        rows = (tmp_path / "sweep_summary.csv").read_text().strip().splitlines()
        assert rows[0].startswith("epsilon,")
        masses = [float(r.split(",")[4]) for r in rows[1:]]
        assert len(masses) == 5
        assert all(b > a for a, b in zip(masses, masses[1:]))
        assert (tmp_path / "sweep_summary.png").exists()
        manifest = json.loads((tmp_path / "sweep.manifest.json").read_text())
        assert manifest["workers"] == 2
        assert len([p for p in manifest["outputs"]
                    if "solution_" in p]) == 5

    def test_reproducible_outputs(self, tmp_path, spec_file):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        for d in (d1, d2):
            run(["sweep", "--model", "flat-torus-3", "--spec", spec_file,
                 "--eps", "0.5,1", "--grid", "201", "--out-dir", str(d)])
        for name in ("solution_00.json", "solution_01.json",
                     "sweep_summary.csv"):
            assert (d1 / name).read_text() == (d2 / name).read_text()


class TestAverageDemo:
    def test_runs_and_reports(self, tmp_path, capsys):
        code = run(["average-demo", "--model", "clifford", "--cases", "8",
                    "--seed", "4", "--grid", "65", "--leaf-grid", "8",
                    "--out", "avg.json", "--out-dir", str(tmp_path)])
        assert code == 0
        payload = json.loads((tmp_path / "avg.json").read_text())
        assert payload["passed"]
        assert len(payload["normalized_residuals"]) == 8


class TestConfigFile:
    def test_defaults_from_config(self, tmp_path, spec_file, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "solve": {"model": "flat-torus-3", "spec": spec_file,
                      "eps": 1.0, "grid": 201, "out": "from_cfg.json",
                      "out-dir": str(tmp_path)}}))
        assert run(["--config", str(cfg), "solve"]) == 0
        assert (tmp_path / "from_cfg.json").exists()

    def test_flags_override_config(self, tmp_path, spec_file):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "solve": {"model": "flat-torus-3", "spec": spec_file,
                      "eps": 1.0, "grid": 201, "out": "a.json",
                      "out-dir": str(tmp_path)}}))
        assert run(["--config", str(cfg), "solve", "--out", "b.json"]) == 0
        assert (tmp_path / "b.json").exists()
        assert not (tmp_path / "a.json").exists()


class TestEnvOutputDir:
    def test_env_var_sets_default_dir(self, tmp_path, spec_file, monkeypatch):
        monkeypatch.setenv("BASICVAR_OUT", str(tmp_path / "envout"))
        assert run(["solve", "--model", "flat-torus-3", "--spec", spec_file,
                    "--eps", "1.0", "--grid", "201", "--out", "sol.json"]) == 0
        assert (tmp_path / "envout" / "sol.json").exists()
