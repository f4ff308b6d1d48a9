"""Deterministic evaluation on the held-out episode set.

All episodes roll forward in lockstep as numpy batches; the policy is
queried with zero exploration noise, so evaluation consumes no random
numbers and never touches agent or buffer state.
"""

from typing import Callable, NamedTuple

import numpy as np

from ..agents import Agent
from ..env import (
    MINUTES_PER_DAY,
    EnvConfig,
    baseline_action,
    energy_for_action,
    next_temperature,
    observe_arrays,
    reward_terms,
)
from ..weather import WeatherSeries
from .protocol import Protocol


class EvalSet(NamedTuple):
    starts: np.ndarray       # (E,) absolute step indices, day-aligned
    init_temps: np.ndarray   # (E,) initial indoor temperatures


class EvalResult(NamedTuple):
    mean_reward: float       # mean per-step reward, averaged over episodes
    violation_kh: float      # mean per-episode comfort violation, Kelvin-hours
    energy_kwh: float        # mean per-episode energy use


class ActionLog(NamedTuple):
    """Flattened applied actions and their bounds over a rollout."""

    actions: np.ndarray
    low: np.ndarray
    high: np.ndarray


def build_eval_set(protocol: Protocol, cfg: EnvConfig, rng: np.random.Generator) -> EvalSet:
    """Fix the held-out episodes: start indices plus initial temperatures."""
    starts = np.asarray(protocol.eval_starts(), dtype=np.int64)
    tod = (starts * cfg.step_minutes) % MINUTES_PER_DAY
    lower, upper = cfg.schedule.bounds_at(tod)
    init_temps = rng.uniform(lower, upper)
    return EvalSet(starts=starts, init_temps=init_temps)


ActionFn = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray], tuple]


def rollout(
    cfg: EnvConfig,
    weather: WeatherSeries,
    eval_set: EvalSet,
    action_fn: ActionFn,
    episode_steps: int,
    record_actions: bool = False,
) -> tuple[EvalResult, ActionLog | None]:
    """Roll all episodes forward together under action_fn.

    action_fn(obs, temp, lower, upper, previous) -> (applied, low, high)
    with every argument and result an (E,) array (obs is (E, 7)).
    """
    n_episodes = eval_set.starts.shape[0]
    if n_episodes == 0:
        raise ValueError("evaluation set is empty")
    idx = eval_set.starts.copy()
    temp = eval_set.init_temps.astype(np.float64).copy()
    off = -1.0 if cfg.season == "heating" else 1.0
    previous = np.full(n_episodes, off)
    reward_sum = np.zeros(n_episodes)
    violation_sum = np.zeros(n_episodes)
    energy_sum = np.zeros(n_episodes)
    logged = [] if record_actions else None

    for _ in range(episode_steps):
        tod = (idx * cfg.step_minutes) % MINUTES_PER_DAY
        lower, upper = cfg.schedule.bounds_at(tod)
        obs = observe_arrays(
            tod, weather.t_out[idx], weather.irradiance[idx], temp, lower, upper
        )
        applied, low, high = action_fn(obs, temp, lower, upper, previous)
        energy = energy_for_action(applied, cfg)
        new_temp = next_temperature(
            temp, weather.t_out[idx], weather.irradiance[idx], energy, cfg
        )
        next_tod = ((idx + 1) * cfg.step_minutes) % MINUTES_PER_DAY
        next_lower, next_upper = cfg.schedule.bounds_at(next_tod)
        reward, violation = reward_terms(new_temp, next_lower, next_upper, energy, cfg)
        reward_sum += reward
        violation_sum += violation
        energy_sum += energy
        if logged is not None:
            logged.append((applied.copy(), np.broadcast_to(low, applied.shape).copy(),
                           np.broadcast_to(high, applied.shape).copy()))
        previous = applied
        temp = new_temp
        idx = idx + 1

    result = EvalResult(
        mean_reward=float(np.mean(reward_sum / episode_steps)),
        violation_kh=float(np.mean(violation_sum) * cfg.step_hours),
        energy_kwh=float(np.mean(energy_sum)),
    )
    log = None
    if logged is not None:
        log = ActionLog(
            actions=np.concatenate([a for a, _, _ in logged]),
            low=np.concatenate([lo for _, lo, _ in logged]),
            high=np.concatenate([hi for _, _, hi in logged]),
        )
    return result, log


def agent_action_fn(agent: Agent, rule) -> ActionFn:
    """Deterministic policy with the enforcement rule applied."""

    def fn(obs, temp, lower, upper, previous):
        pi = agent.policy_batch(obs)
        low, high = rule.bounds(temp, lower, upper)
        return np.clip(pi, low, high), low, high

    return fn


def baseline_action_fn(cfg: EnvConfig, hysteresis: float) -> ActionFn:
    def fn(obs, temp, lower, upper, previous):
        applied = np.asarray(
            baseline_action(temp, lower, upper, previous, hysteresis, cfg.season),
            dtype=np.float64,
        )
        return applied, -1.0, 1.0

    return fn


def evaluate_agent(
    agent: Agent,
    rule,
    cfg: EnvConfig,
    weather: WeatherSeries,
    eval_set: EvalSet,
    episode_steps: int,
    record_actions: bool = False,
) -> tuple[EvalResult, ActionLog | None]:
    return rollout(
        cfg, weather, eval_set, agent_action_fn(agent, rule), episode_steps,
        record_actions=record_actions,
    )


def evaluate_baseline(
    cfg: EnvConfig,
    weather: WeatherSeries,
    eval_set: EvalSet,
    episode_steps: int,
    hysteresis: float,
) -> EvalResult:
    result, _ = rollout(
        cfg, weather, eval_set, baseline_action_fn(cfg, hysteresis), episode_steps
    )
    return result
