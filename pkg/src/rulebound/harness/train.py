"""Single-run training loop with incremental metrics logging.

Random-number discipline: each seed expands into eight independent
substreams (weather, training episodes, evaluation set, network init,
warmup actions, exploration noise, target smoothing noise, batch
sampling) so that structural changes to one consumer never perturb the
others. Evaluation draws no random numbers at all.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..agents import Agent, CriticUpdateResult, DivergenceError, shaped_reward
from ..env import OBS_DIM, RoomEnv, observe
from ..optim import NonFiniteGradientError
from ..replay import Batch
from ..rules import Bounds, ComfortRule, GlobalRule
from ..weather import generate_weather
from .config import RunConfig
from .evaluate import ActionLog, EvalResult, build_eval_set, evaluate_agent, evaluate_baseline
from .protocol import Protocol

CSV_COLUMNS = (
    "epoch",
    "mean_test_reward",
    "violation_kh",
    "energy_kwh",
    "saturation_frac",
    "actor_loss",
    "critic_loss",
    "wall_ms",
)


class TrainingAbortedError(RuntimeError):
    """Training diverged; a diagnostic checkpoint was written."""

    def __init__(self, message: str, checkpoint: Path):
        super().__init__(message)
        self.checkpoint = checkpoint


class SeedStreams(NamedTuple):
    """The eight independent RNG substreams derived from one seed."""

    weather: np.random.Generator
    episodes: np.random.Generator
    evaluation: np.random.Generator
    networks: np.random.Generator
    warmup: np.random.Generator
    exploration: np.random.Generator
    smoothing: np.random.Generator
    batches: np.random.Generator


def seed_streams(seed: int) -> SeedStreams:
    children = np.random.SeedSequence(seed).spawn(len(SeedStreams._fields))
    return SeedStreams(*(np.random.default_rng(child) for child in children))


class MetricsRow(NamedTuple):
    epoch: int
    mean_test_reward: float
    violation_kh: float
    energy_kwh: float
    saturation_frac: float
    actor_loss: float | None    # None while no update has happened yet
    critic_loss: float | None
    wall_ms: float | None       # None unless record_timings is on


class UpdateRecord(NamedTuple):
    """One critic update: the sampled batch fields plus the computed targets."""

    reward: np.ndarray
    reward_raw: np.ndarray
    raw_action: np.ndarray
    rule_low: np.ndarray
    rule_high: np.ndarray
    done: np.ndarray
    targets: np.ndarray
    bootstrap: np.ndarray


@dataclass
class TrainingRecorder:
    """Optional capture of training internals for end-to-end checks."""

    max_updates: int = 0
    record_train_actions: bool = False
    record_eval_actions: bool = False
    updates: list[UpdateRecord] = field(default_factory=list)
    train_actions: list[tuple[float, float, float]] = field(default_factory=list)
    eval_logs: list[ActionLog] = field(default_factory=list)

    def add_update(self, batch: Batch, result: CriticUpdateResult) -> None:
        if len(self.updates) < self.max_updates:
            self.updates.append(
                UpdateRecord(
                    reward=batch.reward.copy(),
                    reward_raw=batch.reward_raw.copy(),
                    raw_action=batch.raw_action.copy(),
                    rule_low=batch.rule_low.copy(),
                    rule_high=batch.rule_high.copy(),
                    done=batch.done.copy(),
                    targets=result.targets.copy(),
                    bootstrap=result.bootstrap.copy(),
                )
            )

    def add_train_action(self, applied: float, low: float, high: float) -> None:
        if self.record_train_actions:
            self.train_actions.append((applied, low, high))

    def add_eval_log(self, log: ActionLog | None) -> None:
        if self.record_eval_actions and log is not None:
            self.eval_logs.append(log)


@dataclass
class TrainResult:
    label: str
    seed: int
    variant: str
    threshold: float
    baseline: EvalResult
    rows: list[MetricsRow]
    best_reward: float | None
    best_epoch: int | None
    epochs_to_threshold: int | None
    epochs_run: int
    stopped_early: bool
    metrics_path: Path
    summary_path: Path
    checkpoint_path: Path

    def summary_dict(self) -> dict:
        return {
            "label": self.label,
            "seed": self.seed,
            "variant": self.variant,
            "threshold": self.threshold,
            "baseline": self.baseline._asdict(),
            "best_reward": self.best_reward,
            "best_epoch": self.best_epoch,
            "epochs_to_threshold": self.epochs_to_threshold,
            "epochs_run": self.epochs_run,
            "stopped_early": self.stopped_early,
            "artifacts": {
                "metrics": str(self.metrics_path),
                "checkpoint": str(self.checkpoint_path),
            },
        }


def enforcement_rule(variant: str, comfort_rule: ComfortRule):
    """Bounds applied to actions: expert rule for "ea", global otherwise."""
    return comfort_rule if variant == "ea" else GlobalRule()


def _format_cell(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def train_run(
    cfg: RunConfig,
    seed: int,
    label: str | None = None,
    out_dir: str | Path | None = None,
    recorder: TrainingRecorder | None = None,
) -> TrainResult:
    """Train one agent for one seed, streaming metrics to disk.

    The metrics CSV is flushed after every row, so an interrupted run
    still leaves a valid (if shorter) file behind.
    """
    label = label or cfg.agent.variant
    out = Path(out_dir if out_dir is not None else cfg.harness.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics_path = out / f"{label}_seed{seed}.metrics.csv"
    summary_path = out / f"{label}_seed{seed}.summary.json"
    checkpoint_path = out / f"{label}_seed{seed}.agent.zip"

    env_cfg = cfg.env.build()
    protocol = Protocol(env_cfg.steps_per_day, cfg.harness.eval_episodes)
    streams = seed_streams(seed)
    episode_rng = streams.episodes
    warmup_rng = streams.warmup
    explore_rng = streams.exploration
    smooth_rng = streams.smoothing
    batch_rng = streams.batches

    weather = generate_weather(
        protocol.weather_days, env_cfg.step_minutes, env_cfg.weather, streams.weather
    )
    eval_set = build_eval_set(protocol, env_cfg, streams.evaluation)
    baseline = evaluate_baseline(
        env_cfg, weather, eval_set, protocol.episode_steps, cfg.harness.baseline_hysteresis
    )
    threshold = baseline.mean_reward

    agent = Agent(cfg.agent.build(obs_dim=OBS_DIM), streams.networks)
    comfort_rule = cfg.rule.build()
    rule = enforcement_rule(cfg.agent.variant, comfort_rule)
    shaping = cfg.agent.variant == "rs"
    penalty_weight = agent.cfg.penalty_weight

    env = RoomEnv(env_cfg, weather, protocol.episode_steps)
    training_starts = protocol.training_starts()
    steps_per_epoch = env_cfg.steps_per_day

    rows: list[MetricsRow] = []
    best_reward: float | None = None
    best_epoch: int | None = None
    epochs_to_threshold: int | None = None
    stopped_early = False
    epochs_run = 0
    env_steps = 0
    state = None

    def finish(error: str | None = None) -> None:
        agent.save(checkpoint_path)
        summary = result_snapshot().summary_dict()
        if error is not None:
            summary["error"] = error
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    def result_snapshot() -> TrainResult:
        return TrainResult(
            label=label,
            seed=seed,
            variant=cfg.agent.variant,
            threshold=threshold,
            baseline=baseline,
            rows=rows,
            best_reward=best_reward,
            best_epoch=best_epoch,
            epochs_to_threshold=epochs_to_threshold,
            epochs_run=epochs_run,
            stopped_early=stopped_early,
            metrics_path=metrics_path,
            summary_path=summary_path,
            checkpoint_path=checkpoint_path,
        )

    with open(metrics_path, "w", newline="") as metrics_file:
        metrics_file.write(",".join(CSV_COLUMNS) + "\n")
        metrics_file.flush()
        try:
            for epoch in range(1, cfg.harness.epochs + 1):
                tick = time.perf_counter()
                saturated_steps = 0
                actor_losses: list[float] = []
                critic_losses: list[float] = []
                for _ in range(steps_per_epoch):
                    if state is None:
                        start = training_starts[
                            int(episode_rng.integers(len(training_starts)))
                        ]
                        state = env.reset(start, episode_rng)
                    obs = observe(state)
                    low, high = rule.bounds(state.temp, state.lower, state.upper)
                    bounds = Bounds(float(low), float(high))
                    if env_steps < agent.cfg.warmup_steps:
                        raw = float(warmup_rng.uniform(bounds.low, bounds.high))
                        applied = raw
                    else:
                        applied, raw = agent.act(
                            obs, bounds, agent.cfg.exploration_noise_std, explore_rng
                        )
                    if raw < bounds.low or raw > bounds.high:
                        saturated_steps += 1
                    step = env.step(state, applied)
                    rule_low, rule_high = comfort_rule.bounds(
                        state.temp, state.lower, state.upper
                    )
                    if shaping:
                        clipped = float(np.clip(raw, rule_low, rule_high))
                        reward = shaped_reward(step.reward, raw, clipped, penalty_weight)
                    else:
                        reward = step.reward
                    agent.buffer.push(
                        obs=obs,
                        action=applied,
                        raw_action=raw,
                        reward=reward,
                        reward_raw=step.reward,
                        next_obs=observe(step.state),
                        # episode ends are time limits, not true terminal
                        # states, so the critic keeps bootstrapping
                        done=False,
                        bounds_low=bounds.low,
                        bounds_high=bounds.high,
                        rule_low=float(rule_low),
                        rule_high=float(rule_high),
                    )
                    if recorder is not None:
                        recorder.add_train_action(applied, bounds.low, bounds.high)
                    env_steps += 1
                    state = None if step.done else step.state
                    if env_steps >= agent.cfg.warmup_steps:
                        batch = agent.buffer.sample(batch_rng, agent.cfg.batch_size)
                        critic_result = agent.critic_update(batch, smooth_rng)
                        critic_losses.append(
                            0.5 * (critic_result.loss1 + critic_result.loss2)
                        )
                        if recorder is not None:
                            recorder.add_update(batch, critic_result)
                        if agent.critic_updates % agent.cfg.policy_delay == 0:
                            actor_result = agent.actor_update(batch)
                            agent.target_update()
                            actor_losses.append(actor_result.loss)
                epochs_run = epoch
                if epoch % cfg.harness.eval_cadence != 0:
                    continue
                record_eval = recorder is not None and recorder.record_eval_actions
                eval_result, eval_log = evaluate_agent(
                    agent, rule, env_cfg, weather, eval_set, protocol.episode_steps,
                    record_actions=record_eval,
                )
                if recorder is not None:
                    recorder.add_eval_log(eval_log)
                wall_ms = (
                    (time.perf_counter() - tick) * 1000.0
                    if cfg.harness.record_timings
                    else None
                )
                row = MetricsRow(
                    epoch=epoch,
                    mean_test_reward=eval_result.mean_reward,
                    violation_kh=eval_result.violation_kh,
                    energy_kwh=eval_result.energy_kwh,
                    saturation_frac=saturated_steps / steps_per_epoch,
                    actor_loss=_mean_or_none(actor_losses),
                    critic_loss=_mean_or_none(critic_losses),
                    wall_ms=wall_ms,
                )
                rows.append(row)
                metrics_file.write(",".join(_format_cell(v) for v in row) + "\n")
                metrics_file.flush()
                if best_reward is None or eval_result.mean_reward > best_reward:
                    best_reward = eval_result.mean_reward
                    best_epoch = epoch
                if epochs_to_threshold is None and eval_result.mean_reward >= threshold:
                    epochs_to_threshold = epoch
                    if cfg.harness.stop_at_threshold:
                        stopped_early = True
                        break
        except (DivergenceError, NonFiniteGradientError) as exc:
            diagnostic = (
                f"training diverged at epoch {epochs_run + 1} "
                f"(environment step {env_steps}): {exc}"
            )
            finish(error=diagnostic)
            raise TrainingAbortedError(diagnostic, checkpoint_path) from exc

    finish()
    return result_snapshot()


def _mean_or_none(values: list[float]) -> float | None:
    if not values:
        return None
    return float(np.mean(values))
