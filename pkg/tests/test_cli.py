"""Command-line interface tests using click's in-process runner."""

import json
from pathlib import Path

import pytest
import yaml
from click.testing import CliRunner

from rulebound.cli import main
from rulebound.weather import load_weather


@pytest.fixture
def runner():
    return CliRunner()


def write_run_config(path: Path, out_dir: Path, **overrides) -> Path:
    doc = {
        "agent": {"variant": "ea", "batch_size": 16, "warmup_steps": 32},
        "rule": {"m": 0.0, "n": 0.25},
        "env": {},
        "harness": {
            "epochs": 2,
            "eval_episodes": 2,
            "eval_cadence": 1,
            "seeds": [0],
            "output_dir": str(out_dir),
        },
    }
    for dotted, value in overrides.items():
        section, key = dotted.split(".")
        doc[section][key] = value
    path.write_text(yaml.safe_dump(doc))
    return path


def artifact_lines(output: str) -> list[str]:
    return [line.split("artifact: ", 1)[1]
            for line in output.splitlines() if line.startswith("artifact: ")]


class TestTrainCommand:
    def test_writes_artifacts_and_summary_line(self, runner, tmp_path):
        cfg = write_run_config(tmp_path / "run.yaml", tmp_path / "out")
        result = runner.invoke(main, ["train", str(cfg)])
        assert result.exit_code == 0, result.output
        assert "seed 0: threshold" in result.output
        paths = artifact_lines(result.output)
        assert len(paths) == 3
        for path in paths:
            assert Path(path).exists()
        assert any(path.endswith("ea_seed0.metrics.csv") for path in paths)

    def test_seed_and_label_overrides(self, runner, tmp_path):
        cfg = write_run_config(tmp_path / "run.yaml", tmp_path / "out",
                               **{"harness.seeds": [0, 1], "harness.epochs": 0})
        result = runner.invoke(main, ["train", str(cfg), "--seed", "1", "--label", "probe"])
        assert result.exit_code == 0, result.output
        paths = artifact_lines(result.output)
        assert all("probe_seed1" in path for path in paths)

    def test_unknown_config_key_fails_with_json_error(self, runner, tmp_path):
        cfg = write_run_config(tmp_path / "run.yaml", tmp_path / "out")
        doc = yaml.safe_load(cfg.read_text())
        doc["agent"]["bogus_knob"] = 9
        cfg.write_text(yaml.safe_dump(doc))
        result = runner.invoke(main, ["train", str(cfg)])
        assert result.exit_code == 1
        error = json.loads(result.stderr.strip().splitlines()[-1])
        assert "bogus_knob" in error["error"]

    def test_missing_config_file_is_a_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["train", str(tmp_path / "absent.yaml")])
        assert result.exit_code == 2

    def test_unknown_option_is_rejected(self, runner, tmp_path):
        cfg = write_run_config(tmp_path / "run.yaml", tmp_path / "out")
        result = runner.invoke(main, ["train", str(cfg), "--turbo"])
        assert result.exit_code != 0


class TestEvaluateCommand:
    def test_roundtrip_against_checkpoint(self, runner, tmp_path):
        cfg = write_run_config(tmp_path / "run.yaml", tmp_path / "out")
        trained = runner.invoke(main, ["train", str(cfg)])
        assert trained.exit_code == 0, trained.output
        checkpoint = next(p for p in artifact_lines(trained.output)
                          if p.endswith(".agent.zip"))
        result = runner.invoke(main, ["evaluate", str(cfg), checkpoint])
        assert result.exit_code == 0, result.output
        assert "variant: ea (seed 0)" in result.output
        assert "mean_reward: -" in result.output

    def test_missing_checkpoint_reports_error(self, runner, tmp_path):
        cfg = write_run_config(tmp_path / "run.yaml", tmp_path / "out")
        result = runner.invoke(main, ["evaluate", str(cfg), str(tmp_path / "no.zip")])
        assert result.exit_code == 1
        error = json.loads(result.stderr.strip().splitlines()[-1])
        assert "no.zip" in error["error"]


class TestCompareCommand:
    def test_two_run_comparison(self, runner, tmp_path):
        doc = {
            "runs": [
                {"label": "one", "agent": {"variant": "classical", "batch_size": 16,
                                           "warmup_steps": 32}},
                {"label": "two", "agent": {"variant": "ea", "batch_size": 16,
                                           "warmup_steps": 32}},
            ],
            "env": {},
            "harness": {"epochs": 1, "eval_episodes": 2, "seeds": [0],
                        "output_dir": str(tmp_path / "out")},
        }
        cfg = tmp_path / "compare.yaml"
        cfg.write_text(yaml.safe_dump(doc))
        result = runner.invoke(main, ["compare", str(cfg), "--out", str(tmp_path / "out")])
        assert result.exit_code == 0, result.output
        assert "one:" in result.output
        assert "two:" in result.output
        paths = artifact_lines(result.output)
        assert any(path.endswith("comparison.json") for path in paths)
        for path in paths:
            assert Path(path).exists()


class TestGradcheckCommand:
    def test_passes_on_fresh_seeds(self, runner):
        result = runner.invoke(main, ["gradcheck", "--networks", "2"])
        assert result.exit_code == 0, result.output
        assert "all gradient checks passed" in result.output

    def test_listing_shows_each_check(self, runner):
        result = runner.invoke(main, ["gradcheck", "--networks", "1"])
        assert result.exit_code == 0
        assert result.output.count("PASS") >= 3


class TestExportWeatherCommand:
    def test_writes_loadable_csv(self, runner, tmp_path):
        out = tmp_path / "wx.csv"
        result = runner.invoke(main, ["export-weather", "--days", "2",
                                      "--seed", "4", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "192 steps over 2 days" in result.output
        series = load_weather(out)
        assert series.n_steps == 192

    def test_config_plumbs_weather_parameters(self, runner, tmp_path):
        # A noiseless, cloudless config yields an exactly periodic series:
        # day one equals day two sample for sample.
        doc = {
            "env": {
                "weather": {
                    "mean_temp": 10.0,
                    "daily_amplitude": 2.0,
                    "seasonal_amplitude": 0.0,
                    "noise_std": 0.0,
                    "cloud_std": 0.0,
                }
            }
        }
        cfg = tmp_path / "wx.yaml"
        cfg.write_text(yaml.safe_dump(doc))
        out = tmp_path / "wx.csv"
        result = runner.invoke(main, ["export-weather", "--days", "2",
                                      "--config", str(cfg), "--out", str(out)])
        assert result.exit_code == 0, result.output
        series = load_weather(out)
        assert series.t_out[:96] == pytest.approx(series.t_out[96:], abs=1e-9)
        assert series.t_out.mean() == pytest.approx(10.0, abs=0.5)

    def test_deterministic_per_seed(self, runner, tmp_path):
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        for target in (first, second):
            result = runner.invoke(main, ["export-weather", "--days", "1",
                                          "--seed", "9", "--out", str(target)])
            assert result.exit_code == 0
        assert first.read_bytes() == second.read_bytes()
