"""Run configuration documents.

One YAML file per run with four sections (agent, rule, env, harness);
comparison documents swap the single agent/rule pair for a list of
labelled runs. Unknown keys are rejected so typos fail loudly instead of
silently falling back to defaults.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..agents import AgentConfig
from ..env import ComfortSchedule, EnvConfig, ScheduleSegment, OBS_DIM
from ..rules import ComfortRule
from ..weather import WeatherConfig

_LABEL_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")
_TIME_PATTERN = re.compile(r"^([01]?\d|2[0-3]):([0-5]\d)$")


def parse_minute(value: int | str) -> int:
    """Minutes since midnight from an int or an HH:MM string."""
    if isinstance(value, bool):
        raise ValueError(f"schedule time must be minutes or HH:MM, got {value!r}")
    if isinstance(value, int):
        return value
    match = _TIME_PATTERN.match(value.strip())
    if match is None:
        raise ValueError(f"schedule time must be minutes or HH:MM, got {value!r}")
    return int(match.group(1)) * 60 + int(match.group(2))


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ScheduleEntry(StrictModel):
    start: int | str
    end: int | str
    lower: float
    upper: float

    def to_segment(self) -> ScheduleSegment:
        return ScheduleSegment(
            parse_minute(self.start), parse_minute(self.end), self.lower, self.upper
        )


class WeatherSection(StrictModel):
    """Overrides for the weather generator; WeatherConfig owns the defaults."""

    mean_temp: float | None = None
    daily_amplitude: float | None = None
    seasonal_amplitude: float | None = None
    noise_std: float | None = None
    noise_persistence: float | None = None
    cloud_std: float | None = None
    cloud_persistence: float | None = None

    def build(self) -> WeatherConfig:
        overrides = {k: v for k, v in self.model_dump().items() if v is not None}
        return WeatherConfig(**overrides)


class EnvSection(StrictModel):
    """Overrides for the room physics; EnvConfig owns the defaults."""

    alpha: float | None = None
    e_max_heat_kwh: float | None = None
    e_max_cool_kwh: float | None = None
    capacitance_kwh_per_deg: float | None = None
    loss_kwh_per_deg: float | None = None
    solar_gain_kwh: float | None = None
    step_minutes: int | None = None
    season: Literal["heating", "cooling"] | None = None
    schedule: list[ScheduleEntry] | None = None
    weather: WeatherSection = Field(default_factory=WeatherSection)

    def build(self) -> EnvConfig:
        overrides = {
            key: value
            for key, value in self.model_dump(exclude={"schedule", "weather"}).items()
            if value is not None
        }
        if self.schedule is not None:
            overrides["schedule"] = ComfortSchedule(
                [entry.to_segment() for entry in self.schedule]
            )
        return EnvConfig(weather=self.weather.build(), **overrides)


class RuleSection(StrictModel):
    """Comfort-rule ramp geometry: start margin m and full-width n."""

    m: float = 0.0
    n: float = 0.25

    def build(self) -> ComfortRule:
        return ComfortRule(self.m, self.n)


class AgentSection(StrictModel):
    variant: Literal["classical", "ea", "rs"]
    penalty_weight: float | None = None
    discount: float = 0.99
    exploration_noise_std: float = 0.1
    tau: float = 0.005
    policy_delay: int = 2
    target_noise_std: float = 0.2
    target_noise_clip: float = 0.5
    batch_size: int = 256
    buffer_capacity: int = 1_000_000
    warmup_steps: int = 1000
    hidden: list[int] = Field(default_factory=lambda: [64, 64])
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3

    def build(self, obs_dim: int = OBS_DIM) -> AgentConfig:
        return AgentConfig(
            variant=self.variant,
            obs_dim=obs_dim,
            discount=self.discount,
            exploration_noise_std=self.exploration_noise_std,
            penalty_weight=self.penalty_weight,
            tau=self.tau,
            policy_delay=self.policy_delay,
            target_noise_std=self.target_noise_std,
            target_noise_clip=self.target_noise_clip,
            batch_size=self.batch_size,
            buffer_capacity=self.buffer_capacity,
            warmup_steps=self.warmup_steps,
            hidden=tuple(self.hidden),
            actor_lr=self.actor_lr,
            critic_lr=self.critic_lr,
        )


class HarnessSection(StrictModel):
    epochs: int = Field(ge=0)
    eval_episodes: int = Field(default=20, ge=1, le=50)
    eval_cadence: int = Field(default=1, ge=1)
    seeds: list[int] = Field(min_length=1)
    output_dir: str = "runs"
    baseline_hysteresis: float = Field(default=0.75, gt=0.0)
    stop_at_threshold: bool = False
    record_timings: bool = False

    @field_validator("seeds")
    @classmethod
    def _distinct(cls, seeds: list[int]) -> list[int]:
        if len(set(seeds)) != len(seeds):
            raise ValueError("seeds must be distinct")
        return seeds


class RunConfig(StrictModel):
    agent: AgentSection
    rule: RuleSection = Field(default_factory=RuleSection)
    env: EnvSection = Field(default_factory=EnvSection)
    harness: HarnessSection


class CompareRun(StrictModel):
    label: str
    agent: AgentSection
    rule: RuleSection = Field(default_factory=RuleSection)

    @field_validator("label")
    @classmethod
    def _file_safe(cls, label: str) -> str:
        if _LABEL_PATTERN.match(label) is None:
            raise ValueError(
                f"label {label!r} is not file-safe (letters, digits, . _ - only)"
            )
        return label


class CompareConfig(StrictModel):
    runs: list[CompareRun] = Field(min_length=2)
    env: EnvSection = Field(default_factory=EnvSection)
    harness: HarnessSection

    @field_validator("runs")
    @classmethod
    def _unique_labels(cls, runs: list[CompareRun]) -> list[CompareRun]:
        labels = [run.label for run in runs]
        if len(set(labels)) != len(labels):
            raise ValueError("run labels must be unique")
        return runs

    def run_config(self, run: CompareRun) -> RunConfig:
        return RunConfig(agent=run.agent, rule=run.rule, env=self.env, harness=self.harness)


def _load_document(path: str | Path) -> dict:
    data = yaml.safe_load(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} is not a key-value document")
    return data


def load_run_config(path: str | Path) -> RunConfig:
    return RunConfig.model_validate(_load_document(path))


def load_compare_config(path: str | Path) -> CompareConfig:
    return CompareConfig.model_validate(_load_document(path))
