"""Room-temperature control environment.

One thermal state (the room temperature) driven by a resistor-capacitor
style balance: heater input, loss to ambient proportional to the indoor
to outdoor difference, and solar gain. All rate constants are per step,
so the update is

    T' = T + (1/C) * (signed energy - loss * (T - T_out) + solar * irradiance)

with the energy sign set by the season. The reward is the negative comfort
exceedance of the post-step temperature plus an energy price:

    r = -max(L - T', T' - U, 0) - alpha * E.

Energy maps from the action in [-1, 1]: in the heating season a = -1 means
heater off and a = +1 full power, E = (a + 1)/2 * E_max_heat; mirrored for
cooling, E = (1 - a)/2 * E_max_cool.

All step math goes through scalar-or-array helpers, so a block of episodes
can be rolled forward in lockstep for fast evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .weather import MINUTES_PER_DAY, WeatherConfig, WeatherSeries

SEASONS = ("heating", "cooling")

# fixed normalization ranges for the observation vector
_T_OUT_RANGE = (-20.0, 40.0)
_T_RANGE = (0.0, 40.0)
_BOUND_RANGE = (10.0, 30.0)

OBS_DIM = 7


class ScheduleError(ValueError):
    """Raised for comfort schedules that overlap or leave gaps."""


@dataclass(frozen=True)
class ScheduleSegment:
    """Comfort band [lower, upper] active from start to end (minutes of day).

    A segment may wrap past midnight (start > end), like 20:00 to 08:00.
    """

    start_minute: int
    end_minute: int
    lower: float
    upper: float

    def __post_init__(self) -> None:
        for name, minute in (("start", self.start_minute), ("end", self.end_minute)):
            if not 0 <= minute < MINUTES_PER_DAY:
                raise ScheduleError(f"{name} minute {minute} outside a day")
        if self.start_minute == self.end_minute:
            raise ScheduleError("zero-length schedule segment")
        if self.lower > self.upper:
            raise ScheduleError(
                f"lower bound {self.lower} exceeds upper bound {self.upper}"
            )

    def minutes(self) -> range | list[int]:
        if self.start_minute < self.end_minute:
            return range(self.start_minute, self.end_minute)
        return [
            *range(self.start_minute, MINUTES_PER_DAY),
            *range(0, self.end_minute),
        ]


class ComfortSchedule:
    """Piecewise-constant daily comfort bounds with full-day coverage."""

    def __init__(self, segments: list[ScheduleSegment]):
        lower = np.full(MINUTES_PER_DAY, np.nan)
        upper = np.full(MINUTES_PER_DAY, np.nan)
        for seg in segments:
            for minute in seg.minutes():
                if not np.isnan(lower[minute]):
                    raise ScheduleError(
                        f"overlapping schedule segments at minute {minute}"
                    )
                lower[minute] = seg.lower
                upper[minute] = seg.upper
        uncovered = np.isnan(lower)
        if uncovered.any():
            minute = int(np.argmax(uncovered))
            raise ScheduleError(f"schedule leaves minute {minute} uncovered")
        self._lower = lower
        self._upper = upper
        self.segments = list(segments)

    @classmethod
    def default(cls) -> "ComfortSchedule":
        return cls(
            [
                ScheduleSegment(8 * 60, 20 * 60, 19.0, 26.0),
                ScheduleSegment(20 * 60, 8 * 60, 21.0, 25.0),
            ]
        )

    def bounds_at(self, tod_minutes):
        """Comfort band at a minute of day (scalar or integer array)."""
        idx = np.asarray(tod_minutes, dtype=np.int64) % MINUTES_PER_DAY
        return self._lower[idx], self._upper[idx]


@dataclass(frozen=True, eq=False)
class EnvConfig:
    alpha: float = 0.05                    # reward units per kWh
    e_max_heat_kwh: float = 1.0            # kWh per step at full heating
    e_max_cool_kwh: float = 1.0            # kWh per step at full cooling
    capacitance_kwh_per_deg: float = 2.5   # kWh to move the room 1 degC
    loss_kwh_per_deg: float = 0.025        # kWh lost per degC of in/out gap, per step
    solar_gain_kwh: float = 0.5            # kWh per step at irradiance 1
    step_minutes: int = 15
    season: str = "heating"
    schedule: ComfortSchedule = field(default_factory=ComfortSchedule.default)
    weather: WeatherConfig = field(default_factory=WeatherConfig)

    def __post_init__(self) -> None:
        positive = (
            ("alpha", self.alpha),
            ("e_max_heat_kwh", self.e_max_heat_kwh),
            ("e_max_cool_kwh", self.e_max_cool_kwh),
            ("capacitance_kwh_per_deg", self.capacitance_kwh_per_deg),
            ("loss_kwh_per_deg", self.loss_kwh_per_deg),
            ("solar_gain_kwh", self.solar_gain_kwh),
        )
        for name, value in positive:
            if value <= 0.0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.step_minutes < 1 or MINUTES_PER_DAY % self.step_minutes != 0:
            raise ValueError(
                f"step length must divide 24 h, got {self.step_minutes} minutes"
            )
        if self.season not in SEASONS:
            raise ValueError(f"season must be one of {SEASONS}, got {self.season!r}")

    @property
    def steps_per_day(self) -> int:
        return MINUTES_PER_DAY // self.step_minutes

    @property
    def step_hours(self) -> float:
        return self.step_minutes / 60.0


@dataclass
class EnvState:
    temp: float            # indoor temperature, degC
    t_out: float           # outdoor temperature at this instant
    irradiance: float      # solar irradiance in [0, 1] at this instant
    lower: float           # current comfort lower bound
    upper: float           # current comfort upper bound
    step_index: int        # absolute index into the weather series
    episode_step: int      # steps taken in this episode
    tod_minutes: int       # minutes since the most recent midnight


class StepResult(NamedTuple):
    state: EnvState
    reward: float
    energy_kwh: float
    violation_deg: float   # comfort exceedance of the post-step temperature
    done: bool


def energy_for_action(action, cfg: EnvConfig):
    """Energy drawn this step (kWh); scalar or elementwise on arrays."""
    a = np.asarray(action, dtype=np.float64)
    if cfg.season == "heating":
        return (a + 1.0) / 2.0 * cfg.e_max_heat_kwh
    return (1.0 - a) / 2.0 * cfg.e_max_cool_kwh


def next_temperature(temp, t_out, irradiance, energy, cfg: EnvConfig):
    """RC balance for one step; scalar or elementwise on arrays."""
    signed = energy if cfg.season == "heating" else -energy
    flux = signed - cfg.loss_kwh_per_deg * (temp - t_out) \
        + cfg.solar_gain_kwh * irradiance
    return temp + flux / cfg.capacitance_kwh_per_deg


def comfort_violation(temp, lower, upper):
    """Exceedance of temp beyond [lower, upper] in degrees, >= 0."""
    return np.maximum(np.maximum(lower - temp, temp - upper), 0.0)


def reward_terms(next_temp, lower, upper, energy, cfg: EnvConfig):
    """(reward, violation_deg) for a post-step temperature."""
    violation = comfort_violation(next_temp, lower, upper)
    return -violation - cfg.alpha * energy, violation


class RoomEnv:
    """Scalar step/reset API over an immutable weather series."""

    def __init__(self, cfg: EnvConfig, weather: WeatherSeries, episode_steps: int):
        if weather.step_minutes != cfg.step_minutes:
            raise ValueError(
                f"weather step {weather.step_minutes} min does not match "
                f"config step {cfg.step_minutes} min"
            )
        if episode_steps < 1:
            raise ValueError("episode_steps must be positive")
        self.cfg = cfg
        self.weather = weather
        self.episode_steps = episode_steps

    def reset(self, start_step: int, rng: np.random.Generator) -> EnvState:
        """Begin an episode at an absolute weather index.

        Indoor temperature starts uniformly inside the comfort band in
        force at that instant.
        """
        if not 0 <= start_step <= self.weather.n_steps - self.episode_steps - 1:
            raise ValueError(
                f"episode starting at step {start_step} does not fit the "
                f"{self.weather.n_steps}-step weather horizon"
            )
        tod = (start_step * self.cfg.step_minutes) % MINUTES_PER_DAY
        lower, upper = self.cfg.schedule.bounds_at(tod)
        temp = float(rng.uniform(lower, upper))
        return EnvState(
            temp=temp,
            t_out=float(self.weather.t_out[start_step]),
            irradiance=float(self.weather.irradiance[start_step]),
            lower=float(lower),
            upper=float(upper),
            step_index=start_step,
            episode_step=0,
            tod_minutes=tod,
        )

    def step(self, state: EnvState, action: float) -> StepResult:
        if not np.isfinite(action):
            raise ValueError(f"action must be finite, got {action}")
        cfg = self.cfg
        energy = float(energy_for_action(action, cfg))
        new_temp = float(
            next_temperature(state.temp, state.t_out, state.irradiance, energy, cfg)
        )
        next_index = state.step_index + 1
        next_tod = (state.tod_minutes + cfg.step_minutes) % MINUTES_PER_DAY
        lower, upper = self.cfg.schedule.bounds_at(next_tod)
        reward, violation = reward_terms(new_temp, lower, upper, energy, cfg)
        next_state = EnvState(
            temp=new_temp,
            t_out=float(self.weather.t_out[next_index]),
            irradiance=float(self.weather.irradiance[next_index]),
            lower=float(lower),
            upper=float(upper),
            step_index=next_index,
            episode_step=state.episode_step + 1,
            tod_minutes=next_tod,
        )
        return StepResult(
            state=next_state,
            reward=float(reward),
            energy_kwh=energy,
            violation_deg=float(violation),
            done=next_state.episode_step >= self.episode_steps,
        )


def _scale(value, low, high):
    return np.clip(2.0 * (np.asarray(value, dtype=np.float64) - low) / (high - low) - 1.0,
                   -1.0, 1.0)


def observe(state: EnvState) -> np.ndarray:
    """Observation vector for one state: 7 entries, each in [-1, 1]."""
    return observe_arrays(
        np.asarray(state.tod_minutes),
        np.asarray(state.t_out),
        np.asarray(state.irradiance),
        np.asarray(state.temp),
        np.asarray(state.lower),
        np.asarray(state.upper),
    )


def observe_arrays(tod_minutes, t_out, irradiance, temp, lower, upper) -> np.ndarray:
    """Batched observation builder; inputs broadcast, output (..., 7)."""
    phase = 2.0 * np.pi * np.asarray(tod_minutes, dtype=np.float64) / MINUTES_PER_DAY
    parts = [
        np.sin(phase),
        np.cos(phase),
        _scale(t_out, *_T_OUT_RANGE),
        2.0 * np.asarray(irradiance, dtype=np.float64) - 1.0,
        _scale(temp, *_T_RANGE),
        _scale(lower, *_BOUND_RANGE),
        _scale(upper, *_BOUND_RANGE),
    ]
    return np.stack(np.broadcast_arrays(*parts), axis=-1)


def baseline_action(temp, lower, upper, previous, hysteresis: float, season: str):
    """Bang-bang controller with a hold band; scalar or elementwise.

    Heating season: full heat below lower + hysteresis, off above
    upper - hysteresis, otherwise keep the previous action. Mirrored for
    cooling. Defines the convergence threshold for the benchmark.
    """
    t = np.asarray(temp, dtype=np.float64)
    on = np.asarray(lower, dtype=np.float64) + hysteresis
    off = np.asarray(upper, dtype=np.float64) - hysteresis
    if season == "heating":
        return np.where(t < on, 1.0, np.where(t > off, -1.0, previous))
    return np.where(t > off, -1.0, np.where(t < on, 1.0, previous))
