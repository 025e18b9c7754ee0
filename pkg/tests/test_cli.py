"""Tests for the batch command-line front end."""

import json
import subprocess
import sys

import pytest

from leakywire.cli import main


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


GAP_SCATTER = {
    "alpha": 2.0,
    "geometry": {"family": "gap", "params": {"L": 0.8}},
    "lambda": {"min": -0.8, "max": -0.2, "count": 3},
    "mesh": {"n_nodes": 120},
}


class TestScatterTask:
    def test_gap_sweep(self, tmp_path):
        cfg = write_config(tmp_path, GAP_SCATTER)
        out = tmp_path / "out"
        assert main(["scatter", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["task"] == "scatter"
        assert summary["summary"]["rows"] == 3
        assert summary["summary"]["max_defect"] < 1e-10
        lines = (out / "scatter.csv").read_text().splitlines()
        assert lines[1] == "# config_hash " + summary["config_hash"]

    def test_empty_geometry_rows_trivial(self, tmp_path):
        cfg = write_config(tmp_path, {
            "alpha": 2.0, "geometry": {}, "lambda": {"values": [-0.5, -0.3]}})
        out = tmp_path / "out"
        assert main(["scatter", "--config", cfg, "--out", str(out)]) == 0
        rows = [l.split(",") for l in
                (out / "scatter.csv").read_text().splitlines()[3:]]
        for row in rows:
            assert float(row[2]) == 1.0 and float(row[3]) == 0.0
            assert float(row[4]) == 0.0 and float(row[5]) == 0.0

    def test_determinism(self, tmp_path):
        cfg = write_config(tmp_path, GAP_SCATTER)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["scatter", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["scatter", "--config", cfg, "--out", str(out2)]) == 0
        assert (out1 / "scatter.csv").read_bytes() == \
            (out2 / "scatter.csv").read_bytes()

    def test_lambda_outside_window_rejected(self, tmp_path):
        bad = dict(GAP_SCATTER, **{"lambda": -5.0})
        cfg = write_config(tmp_path, bad)
        assert main(["scatter", "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 1


class TestOtherTasks:
    def test_field(self, tmp_path):
        cfg = write_config(tmp_path, {
            "alpha": 2.0, "geometry": {"family": "gap", "params": {"L": 0.8}},
            "lambda": -0.5, "mesh": {"n_nodes": 120},
            "field": {"points_x1": 31, "points_x2": 3, "height": 0.4,
                      "extent_factor": 10.0}})
        out = tmp_path / "out"
        assert main(["field", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())["summary"]
        assert summary["asymptote_residual"] < 5e-2
        assert (out / "field.csv").exists()

    def test_spectrum(self, tmp_path):
        cfg = write_config(tmp_path, {
            "alpha": 5.0,
            "geometry": {"family": "bump", "params": {"h": 0.5, "w": 1.0}},
            "scan": {"min": -6.45, "max": -6.3, "resolution": 0.05},
            "mesh": {"n_nodes": 120}})
        out = tmp_path / "out"
        assert main(["spectrum", "--config", cfg, "--out", str(out)]) == 0
        payload = json.loads((out / "spectrum.json").read_text())
        assert len(payload["bound_states"]) == 1
        assert payload["bound_states"][0]["lambda_star"] < -6.25

    def test_spectrum_range_above_threshold_rejected(self, tmp_path):
        cfg = write_config(tmp_path, {
            "alpha": 5.0,
            "geometry": {"family": "bump", "params": {"h": 0.5, "w": 1.0}},
            "scan": {"min": -6.0, "max": -5.0}})
        assert main(["spectrum", "--config", cfg,
                     "--out", str(tmp_path / "o")]) == 1

    def test_conjecture(self, tmp_path):
        cfg = write_config(tmp_path, {
            "geometry": {"family": "bump", "params": {"h": 0.3, "w": 1.0}},
            "conjecture": {"k": 1.0, "alphas": [5.0]},
            "mesh": {"n_nodes": 120}})
        out = tmp_path / "out"
        assert main(["conjecture", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "conjecture.csv").read_text().splitlines()
        assert len(lines) == 4

    def test_selftest(self, tmp_path):
        out = tmp_path / "out"
        assert main(["selftest", "--out", str(out)]) == 0
        payload = json.loads((out / "selftest.json").read_text())
        assert payload["all_passed"]
        assert set(payload["errors"]) == set(payload["tolerances"])


class TestConfigHandling:
    def test_missing_file(self, tmp_path):
        assert main(["scatter", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)]) == 1

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["scatter", "--config", str(path),
                     "--out", str(tmp_path)]) == 1

    def test_missing_field_named(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"alpha": 2.0, "lambda": -0.5})
        assert main(["scatter", "--config", cfg, "--out", str(tmp_path)]) == 1
        assert "geometry" in capsys.readouterr().err

    def test_show_defaults(self, capsys):
        assert main(["--show-defaults"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["mesh"]["n_nodes"] == 400

    def test_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "leakywire.cli", "--show-defaults"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        json.loads(proc.stdout)
