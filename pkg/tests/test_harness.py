"""Harness tests: episode layout, config validation, training loop
contracts, evaluation purity, and the comparison report."""

import csv
import json

import numpy as np
import pytest

from rulebound.agents import Agent, DivergenceError, shaped_reward
from rulebound.harness import (
    CadenceMismatchError,
    CompareConfig,
    Protocol,
    RunConfig,
    TrainingAbortedError,
    TrainingRecorder,
    build_eval_set,
    compare_runs,
    evaluate_agent,
    evaluate_baseline,
    load_compare_config,
    load_run_config,
    train_run,
)
from rulebound.harness.config import parse_minute
from rulebound.harness.evaluate import rollout
from rulebound.harness.protocol import EVAL_OFFSET_DAYS, SLICE_DAYS
from rulebound.harness.train import seed_streams
from rulebound.rules import GlobalRule
from rulebound.weather import generate_weather


def run_doc(**overrides):
    doc = {
        "agent": {"variant": "ea", "batch_size": 16, "warmup_steps": 32},
        "rule": {"m": 0.0, "n": 0.25},
        "harness": {"epochs": 2, "eval_episodes": 2, "seeds": [0]},
    }
    for key, value in overrides.items():
        section, _, field = key.partition(".")
        if field:
            doc.setdefault(section, {})[field] = value
        else:
            doc[section] = value
    return doc


def make_cfg(tmp_path, **overrides):
    doc = run_doc(**overrides)
    doc["harness"]["output_dir"] = str(tmp_path)
    return RunConfig.model_validate(doc)


class TestProtocol:
    def test_default_layout(self):
        proto = Protocol(96, 20)
        assert proto.horizon_days == 240
        assert proto.weather_days == 241
        assert proto.episode_steps == 288
        assert len(proto.training_start_days()) == 140
        assert proto.eval_starts()[0] == 9 * 96
        assert proto.eval_starts()[-1] == 237 * 96

    def test_training_days_disjoint_from_eval_days(self):
        for eval_episodes in (1, 3, 20, 50):
            proto = Protocol(96, eval_episodes)
            eval_days = {
                start // 96 + offset
                for start in proto.eval_starts()
                for offset in range(3)
            }
            train_days = {
                day + offset
                for day in proto.training_start_days()
                for offset in range(3)
            }
            assert eval_days.isdisjoint(train_days)
            assert len(eval_days) == 3 * eval_episodes

    def test_training_horizon_is_the_remainder(self):
        proto = Protocol(96, 20)
        # every non-eval day is reachable by some training episode
        train_days = {
            day + offset
            for day in proto.training_start_days()
            for offset in range(3)
        }
        assert len(train_days) == 180

    def test_episodes_fit_weather(self):
        proto = Protocol(96, 5)
        last = max(proto.eval_starts() + proto.training_starts())
        assert last + proto.episode_steps + 1 <= proto.weather_days * 96

    def test_slice_geometry(self):
        assert EVAL_OFFSET_DAYS + 3 == SLICE_DAYS


class TestConfig:
    def test_yaml_roundtrip(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text(
            "agent:\n  variant: rs\n  penalty_weight: 7.5\n"
            "rule:\n  m: 0.1\n  n: 0.5\n"
            "env:\n  alpha: 0.02\n"
            "harness:\n  epochs: 5\n  seeds: [3, 4]\n"
        )
        cfg = load_run_config(path)
        assert cfg.agent.variant == "rs"
        assert cfg.agent.penalty_weight == 7.5
        assert cfg.rule.n == 0.5
        assert cfg.env.alpha == 0.02
        assert cfg.harness.seeds == [3, 4]

    def test_unknown_key_rejected_by_name(self):
        with pytest.raises(ValueError, match="bogus"):
            RunConfig.model_validate(run_doc(**{"agent.bogus": 1}))

    def test_duplicate_seeds_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            RunConfig.model_validate(run_doc(**{"harness.seeds": [1, 1]}))

    @pytest.mark.parametrize(
        "value, minutes",
        [("08:00", 480), ("20:30", 1230), ("0:05", 5), (720, 720)],
    )
    def test_parse_minute(self, value, minutes):
        assert parse_minute(value) == minutes

    @pytest.mark.parametrize("value", ["8am", "24:00", "12:60", "", True])
    def test_parse_minute_rejects(self, value):
        with pytest.raises(ValueError):
            parse_minute(value)

    def test_schedule_entries_build(self):
        doc = run_doc(**{"env.schedule": [
            {"start": "08:00", "end": "20:00", "lower": 19, "upper": 26},
            {"start": "20:00", "end": "08:00", "lower": 21, "upper": 25},
        ]})
        env_cfg = RunConfig.model_validate(doc).env.build()
        assert env_cfg.schedule.bounds_at(600) == (19.0, 26.0)
        assert env_cfg.schedule.bounds_at(1230) == (21.0, 25.0)

    def test_default_schedule_when_omitted(self):
        env_cfg = RunConfig.model_validate(run_doc()).env.build()
        assert env_cfg.schedule.bounds_at(0) == (21.0, 25.0)

    def test_compare_labels_unique(self):
        doc = {
            "runs": [
                {"label": "a", "agent": {"variant": "classical"}},
                {"label": "a", "agent": {"variant": "ea"}},
            ],
            "harness": {"epochs": 1, "seeds": [0]},
        }
        with pytest.raises(ValueError, match="unique"):
            CompareConfig.model_validate(doc)

    def test_compare_label_file_safety(self):
        doc = {
            "runs": [
                {"label": "ok", "agent": {"variant": "classical"}},
                {"label": "../evil", "agent": {"variant": "ea"}},
            ],
            "harness": {"epochs": 1, "seeds": [0]},
        }
        with pytest.raises(ValueError, match="file-safe"):
            CompareConfig.model_validate(doc)

    def test_non_mapping_document_rejected(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("- just\n- a list\n")
        with pytest.raises(ValueError, match="key-value"):
            load_run_config(path)

    def test_compare_document_loads(self, tmp_path):
        path = tmp_path / "cmp.yaml"
        path.write_text(
            "runs:\n"
            "  - label: classical\n    agent: {variant: classical}\n"
            "  - label: ea\n    agent: {variant: ea}\n    rule: {m: 0.0, n: 0.5}\n"
            "harness: {epochs: 2, seeds: [0, 1]}\n"
        )
        cfg = load_compare_config(path)
        assert [r.label for r in cfg.runs] == ["classical", "ea"]
        run_cfg = cfg.run_config(cfg.runs[1])
        assert run_cfg.agent.variant == "ea"
        assert run_cfg.rule.n == 0.5
        assert run_cfg.harness.epochs == 2


class TestSeedStreams:
    def test_reproducible(self):
        a = seed_streams(7)
        b = seed_streams(7)
        for rng_a, rng_b in zip(a, b):
            assert rng_a.uniform() == rng_b.uniform()

    def test_streams_independent(self):
        streams = seed_streams(7)
        draws = [rng.uniform() for rng in streams]
        assert len(set(draws)) == len(draws)


class TestTrainRun:
    def test_zero_epochs_header_only(self, tmp_path):
        cfg = make_cfg(tmp_path, **{"harness.epochs": 0})
        result = train_run(cfg, 0)
        assert result.metrics_path.read_text() == (
            "epoch,mean_test_reward,violation_kh,energy_kwh,"
            "saturation_frac,actor_loss,critic_loss,wall_ms\n"
        )
        assert result.best_reward is None
        assert result.epochs_to_threshold is None
        assert result.checkpoint_path.exists()
        summary = json.loads(result.summary_path.read_text())
        assert summary["epochs_run"] == 0
        assert summary["best_reward"] is None

    def test_same_seed_byte_identical_csv(self, tmp_path):
        cfg_a = make_cfg(tmp_path / "a")
        cfg_b = make_cfg(tmp_path / "b")
        res_a = train_run(cfg_a, 0)
        res_b = train_run(cfg_b, 0)
        bytes_a = res_a.metrics_path.read_bytes()
        assert bytes_a == res_b.metrics_path.read_bytes()
        assert len(bytes_a.splitlines()) == 3  # header + one row per epoch

    def test_recorder_does_not_change_results(self, tmp_path):
        res_a = train_run(make_cfg(tmp_path / "a"), 0)
        recorder = TrainingRecorder(max_updates=50, record_train_actions=True,
                                    record_eval_actions=True)
        res_b = train_run(make_cfg(tmp_path / "b"), 0, recorder=recorder)
        assert res_a.metrics_path.read_bytes() == res_b.metrics_path.read_bytes()
        assert recorder.updates and recorder.train_actions and recorder.eval_logs

    def test_rows_follow_cadence(self, tmp_path):
        cfg = make_cfg(tmp_path, **{"harness.epochs": 4, "harness.eval_cadence": 2})
        result = train_run(cfg, 0)
        assert [row.epoch for row in result.rows] == [2, 4]

    def test_update_counts(self, tmp_path):
        cfg = make_cfg(tmp_path, **{"harness.epochs": 1})
        recorder = TrainingRecorder(max_updates=1000)
        result = train_run(cfg, 0, recorder=recorder)
        # warmup 32: updates happen on steps 32..96 of the single epoch
        assert len(recorder.updates) == 96 - 32 + 1
        assert result.epochs_run == 1

    def test_stop_at_threshold(self, tmp_path):
        # an absurd hysteresis makes the baseline heat continuously, so
        # even an untrained agent clears the threshold at the first eval
        cfg = make_cfg(
            tmp_path,
            **{
                "harness.epochs": 5,
                "harness.baseline_hysteresis": 10.0,
                "harness.stop_at_threshold": True,
            },
        )
        result = train_run(cfg, 0)
        assert result.epochs_to_threshold == 1
        assert result.stopped_early
        assert result.epochs_run == 1
        assert len(result.rows) == 1

    def test_shaped_and_raw_rewards_recorded(self, tmp_path):
        recorder = TrainingRecorder(max_updates=100)
        # high thermal loss drives the temperature out of the comfort band
        # during warmup, so the recorded updates include shaped transitions
        cfg = make_cfg(
            tmp_path, **{"agent.variant": "rs", "env.loss_kwh_per_deg": 0.2}
        )
        train_run(cfg, 0, recorder=recorder)
        assert recorder.updates
        saw_penalty = False
        for update in recorder.updates:
            np.testing.assert_array_equal(
                update.targets, update.reward + update.bootstrap
            )
            clipped = np.clip(update.raw_action, update.rule_low, update.rule_high)
            expected = shaped_reward(update.reward_raw, update.raw_action, clipped, 10.0)
            np.testing.assert_array_equal(update.reward, expected)
            saw_penalty = saw_penalty or bool(np.any(update.reward != update.reward_raw))
        assert saw_penalty

    def test_ea_learns_from_raw_rewards(self, tmp_path):
        recorder = TrainingRecorder(max_updates=100)
        train_run(make_cfg(tmp_path), 0, recorder=recorder)
        for update in recorder.updates:
            np.testing.assert_array_equal(update.reward, update.reward_raw)
            np.testing.assert_array_equal(
                update.targets, update.reward_raw + update.bootstrap
            )

    def test_ea_train_actions_within_bounds(self, tmp_path):
        recorder = TrainingRecorder(record_train_actions=True,
                                    record_eval_actions=True)
        train_run(make_cfg(tmp_path), 0, recorder=recorder)
        actions = np.array([a for a, _, _ in recorder.train_actions])
        low = np.array([lo for _, lo, _ in recorder.train_actions])
        high = np.array([hi for _, _, hi in recorder.train_actions])
        assert np.all(actions >= low) and np.all(actions <= high)
        for log in recorder.eval_logs:
            assert np.all(log.actions >= log.low)
            assert np.all(log.actions <= log.high)

    def test_divergence_aborts_with_checkpoint(self, tmp_path, monkeypatch):
        def explode(self, batch, rng):
            raise DivergenceError("critic target contains 256 non-finite values")

        monkeypatch.setattr(Agent, "critic_update", explode)
        cfg = make_cfg(tmp_path)
        with pytest.raises(TrainingAbortedError) as excinfo:
            train_run(cfg, 0)
        assert excinfo.value.checkpoint.exists()
        summary = json.loads((tmp_path / "ea_seed0.summary.json").read_text())
        assert "diverged" in summary["error"]

    def test_metrics_csv_parses(self, tmp_path):
        result = train_run(make_cfg(tmp_path), 0)
        with open(result.metrics_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        assert float(rows[0]["mean_test_reward"]) == result.rows[0].mean_test_reward
        assert rows[0]["wall_ms"] == ""

    def test_wall_ms_recorded_when_asked(self, tmp_path):
        cfg = make_cfg(tmp_path, **{"harness.epochs": 1, "harness.record_timings": True})
        result = train_run(cfg, 0)
        assert result.rows[0].wall_ms is not None
        assert result.rows[0].wall_ms > 0.0


class TestEvaluate:
    @pytest.fixture()
    def setup(self, tmp_path):
        cfg = make_cfg(tmp_path)
        env_cfg = cfg.env.build()
        proto = Protocol(env_cfg.steps_per_day, 3)
        streams = seed_streams(0)
        weather = generate_weather(
            proto.weather_days, env_cfg.step_minutes, env_cfg.weather, streams.weather
        )
        eval_set = build_eval_set(proto, env_cfg, streams.evaluation)
        agent = Agent(cfg.agent.build(), streams.networks)
        return cfg, env_cfg, proto, weather, eval_set, agent

    def test_evaluation_is_pure(self, setup, tmp_path):
        cfg, env_cfg, proto, weather, eval_set, agent = setup
        before = tmp_path / "before.zip"
        after = tmp_path / "after.zip"
        agent.save(before)
        result1, _ = evaluate_agent(
            agent, GlobalRule(), env_cfg, weather, eval_set, proto.episode_steps
        )
        result2, _ = evaluate_agent(
            agent, GlobalRule(), env_cfg, weather, eval_set, proto.episode_steps
        )
        agent.save(after)
        assert before.read_bytes() == after.read_bytes()
        assert len(agent.buffer) == 0
        assert result1 == result2

    def test_baseline_is_finite_and_negative(self, setup):
        _, env_cfg, proto, weather, eval_set, _ = setup
        baseline = evaluate_baseline(
            env_cfg, weather, eval_set, proto.episode_steps, 0.5
        )
        assert np.isfinite(baseline.mean_reward)
        assert baseline.mean_reward < 0.0
        assert baseline.violation_kh >= 0.0
        assert baseline.energy_kwh > 0.0

    def test_constant_off_is_much_worse_than_baseline(self, setup):
        _, env_cfg, proto, weather, eval_set, _ = setup
        baseline = evaluate_baseline(
            env_cfg, weather, eval_set, proto.episode_steps, 0.5
        )

        def always_off(obs, temp, lower, upper, previous):
            return np.full(temp.shape, -1.0), -1.0, 1.0

        off_result, _ = rollout(
            env_cfg, weather, eval_set, always_off, proto.episode_steps
        )
        assert off_result.mean_reward < 10 * baseline.mean_reward
        assert off_result.violation_kh > baseline.violation_kh

    def test_eval_set_initial_temps_inside_band(self, setup):
        cfg, env_cfg, proto, weather, eval_set, _ = setup
        lower, upper = env_cfg.schedule.bounds_at(0)
        assert np.all(eval_set.init_temps >= lower)
        assert np.all(eval_set.init_temps <= upper)
        assert eval_set.starts.shape == eval_set.init_temps.shape


class TestCompare:
    def fast_cfg(self, tmp_path, variant="classical", **extra):
        over = {
            "agent.variant": variant,
            "harness.epochs": 1,
            "harness.baseline_hysteresis": 10.0,
            **extra,
        }
        return make_cfg(tmp_path, **over)

    def test_self_comparison_speedup_one(self, tmp_path):
        cfg = self.fast_cfg(tmp_path / "runs")
        report = compare_runs(
            [("classical", cfg), ("again", cfg)], tmp_path / "out"
        )
        assert report["speedup_vs_classical"]["classical"] == 1.0
        assert report["speedup_vs_classical"]["again"] == 1.0
        assert report["reference"] == "classical"

    def test_no_convergence_reported_and_excluded(self, tmp_path):
        fast = self.fast_cfg(tmp_path / "runs")
        slow = make_cfg(tmp_path / "runs", **{"harness.epochs": 1})
        report = compare_runs(
            [("classical", fast), ("never", slow)], tmp_path / "out"
        )
        never = report["runs"]["never"]
        assert never["median_epochs_to_threshold"] is None
        assert never["per_seed"]["0"]["convergence"] == "no convergence"
        assert report["speedup_vs_classical"]["never"] is None
        assert report["speedup_vs_classical"]["classical"] == 1.0

    def test_cadence_mismatch_rejected(self, tmp_path):
        a = self.fast_cfg(tmp_path / "a")
        b = self.fast_cfg(tmp_path / "b", **{"harness.eval_cadence": 2})
        with pytest.raises(CadenceMismatchError):
            compare_runs([("a", a), ("b", b)], tmp_path / "out")

    def test_fewer_than_two_runs_rejected(self, tmp_path):
        cfg = self.fast_cfg(tmp_path)
        with pytest.raises(ValueError, match="two"):
            compare_runs([("only", cfg)], tmp_path / "out")

    def test_report_and_curves_written(self, tmp_path):
        cfg = self.fast_cfg(tmp_path / "runs", **{"harness.seeds": [0, 1]})
        report = compare_runs(
            [("classical", cfg), ("twin", cfg)], tmp_path / "out"
        )
        assert (tmp_path / "out" / "comparison.json").exists()
        on_disk = json.loads((tmp_path / "out" / "comparison.json").read_text())
        assert on_disk["runs"].keys() == {"classical", "twin"}
        for label in ("classical", "twin"):
            curve = tmp_path / "out" / f"{label}.curve.csv"
            assert str(curve) == report["curves"][label]
            with open(curve, newline="") as fh:
                rows = list(csv.DictReader(fh))
            assert rows
            assert set(rows[0]) == {
                "epoch", "mean_test_reward_seed0", "mean_test_reward_seed1"
            }

    def test_compare_config_document(self, tmp_path):
        doc = {
            "runs": [
                {"label": "classical", "agent": {"variant": "classical",
                                                 "batch_size": 16, "warmup_steps": 32}},
                {"label": "ea", "agent": {"variant": "ea", "batch_size": 16,
                                          "warmup_steps": 32},
                 "rule": {"m": 0.0, "n": 0.25}},
            ],
            "harness": {"epochs": 1, "eval_episodes": 2, "seeds": [0],
                        "baseline_hysteresis": 10.0,
                        "output_dir": str(tmp_path)},
        }
        from rulebound.harness import run_compare

        report = run_compare(CompareConfig.model_validate(doc))
        assert report["runs"]["ea"]["rule"] == {"m": 0.0, "n": 0.25}
        assert report["threshold_per_seed"].keys() == {"0"}
