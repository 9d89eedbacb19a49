"""Command-line surface: subcommands, flag precedence, exit codes."""

import json

import numpy as np
import pytest

from aoisim.cli import _parse_grid, main


def write_tiny_config(path):
    path.write_text(
        "devices: 2\n"
        "rb_count: 1\n"
        "trainer:\n"
        "  net_hidden: [8]\n"
        "  batch_size: 16\n"
        "run:\n"
        "  slots: 100\n"
        "  eval_slots: 30\n"
        "  seeds: [0]\n")
    return path


class TestRun:
    def test_run_writes_artifacts(self, tmp_path):
        cfg = write_tiny_config(tmp_path / "cfg.yaml")
        out = tmp_path / "out"
        code = main(["run", "--config", str(cfg), "--mode", "uniform",
                     "--seed", "3", "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["seed"] == 3
        assert (out / "ledger.csv").exists()

    def test_flag_overrides_config(self, tmp_path):
        cfg = write_tiny_config(tmp_path / "cfg.yaml")
        out = tmp_path / "out"
        code = main(["run", "--config", str(cfg), "--mode", "uniform",
                     "--seed", "0", "--out", str(out), "--slots", "60",
                     "--eval-slots", "20"])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["slots"] == 60

    def test_checkpoint_flag(self, tmp_path):
        cfg = write_tiny_config(tmp_path / "cfg.yaml")
        out = tmp_path / "out"
        code = main(["run", "--config", str(cfg), "--mode", "dqn",
                     "--seed", "0", "--out", str(out), "--checkpoint"])
        assert code == 0
        assert (out / "checkpoint" / "device_0.bin").exists()

    def test_bad_config_exit_code(self, tmp_path):
        bad = tmp_path / "bad.yaml"
        bad.write_text("devices: -2\n")
        assert main(["run", "--config", str(bad), "--mode", "uniform"]) == 2


class TestSweep:
    def test_sweep_writes_aggregate(self, tmp_path):
        cfg = write_tiny_config(tmp_path / "cfg.yaml")
        out = tmp_path / "sweep"
        code = main(["sweep", "--config", str(cfg), "--axis", "devices",
                     "--values", "2,3", "--modes", "uniform",
                     "--out", str(out)])
        assert code == 0
        text = (out / "sweep.csv").read_text()
        assert text.startswith("axis,value,mode,config_hash,n_seeds")
        assert len(text.strip().split("\n")) == 3


class TestPareto:
    def test_grid_parser(self):
        grid = _parse_grid("0:1:0.5")
        assert grid == [(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]

    def test_pareto_writes_frontier(self, tmp_path):
        cfg = write_tiny_config(tmp_path / "cfg.yaml")
        out = tmp_path / "pareto"
        code = main(["pareto", "--config", str(cfg), "--grid", "0.25:0.75:0.5",
                     "--modes", "uniform", "--out", str(out)])
        assert code == 0
        assert (out / "pareto.csv").exists()


class TestFit:
    def test_fit_reports_kind(self, tmp_path, capsys):
        path = tmp_path / "trace.csv"
        rows = ["t,x"]
        x = 2.0
        for i in range(30):
            rows.append(f"{i},{x!r}")
            x *= 0.9
        path.write_text("\n".join(rows) + "\n")
        assert main(["fit", "--csv", str(path)]) == 0
        out = capsys.readouterr().out
        assert "kind=linear" in out
        assert "disturbance_bound" in out


class TestSelftest:
    def test_selftest_passes(self, capsys):
        assert main(["selftest"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out
