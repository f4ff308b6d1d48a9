"""Synthetic heating-season weather: outdoor temperature and solar irradiance.

Outdoor temperature is a daily sinusoid (coldest around 03:00, warmest
around 15:00) on top of a slow seasonal dip, plus AR(1) noise. Irradiance
is a solar arc that is exactly zero at midnight and peaks at noon, scaled
by an AR(1) cloud attenuation and clipped to [0, 1]. Everything is a pure
function of (config, seed), so a series can be regenerated bit-for-bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MINUTES_PER_DAY = 24 * 60


@dataclass(frozen=True)
class WeatherConfig:
    """Defaults describe a mild, fairly settled heating-season climate."""

    mean_temp: float = 4.0
    daily_amplitude: float = 3.0
    seasonal_amplitude: float = 2.0
    noise_std: float = 0.5
    noise_persistence: float = 0.9
    cloud_std: float = 0.15
    cloud_persistence: float = 0.95

    def __post_init__(self) -> None:
        if self.daily_amplitude < 0 or self.seasonal_amplitude < 0:
            raise ValueError("amplitudes must be non-negative")
        if self.noise_std < 0 or self.cloud_std < 0:
            raise ValueError("noise stds must be non-negative")
        for name in ("noise_persistence", "cloud_persistence"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {value}")


@dataclass(frozen=True, eq=False)
class WeatherSeries:
    step_minutes: int
    t_out: np.ndarray
    irradiance: np.ndarray

    def __post_init__(self) -> None:
        if self.t_out.shape != self.irradiance.shape or self.t_out.ndim != 1:
            raise ValueError("t_out and irradiance must be matching 1-D arrays")
        if MINUTES_PER_DAY % self.step_minutes != 0:
            raise ValueError(f"step length {self.step_minutes} min must divide 24 h")

    @property
    def n_steps(self) -> int:
        return self.t_out.shape[0]

    @property
    def steps_per_day(self) -> int:
        return MINUTES_PER_DAY // self.step_minutes

    @property
    def n_days(self) -> float:
        return self.n_steps / self.steps_per_day


def _ar1(rng: np.random.Generator, n: int, persistence: float, std: float) -> np.ndarray:
    """Stationary AR(1) noise with the given marginal std."""
    out = np.zeros(n)
    if std == 0.0 or n == 0:
        return out
    innovation = std * np.sqrt(1.0 - persistence**2) * rng.standard_normal(n)
    out[0] = std * rng.standard_normal()
    for t in range(1, n):
        out[t] = persistence * out[t - 1] + innovation[t]
    return out


def generate_weather(
    days: int,
    step_minutes: int,
    cfg: WeatherConfig,
    rng: np.random.Generator,
) -> WeatherSeries:
    if days < 1:
        raise ValueError(f"horizon must be at least one day, got {days}")
    steps_per_day = MINUTES_PER_DAY // step_minutes
    n = days * steps_per_day
    hours = np.arange(n) * (step_minutes / 60.0)
    tod = hours % 24.0

    daily = cfg.daily_amplitude * np.sin(2.0 * np.pi * (tod - 9.0) / 24.0)
    seasonal = -cfg.seasonal_amplitude * np.sin(np.pi * hours / (24.0 * days))
    noise = _ar1(rng, n, cfg.noise_persistence, cfg.noise_std)
    t_out = cfg.mean_temp + daily + seasonal + noise

    arc = np.maximum(0.0, -np.cos(2.0 * np.pi * tod / 24.0))
    cloud = _ar1(rng, n, cfg.cloud_persistence, cfg.cloud_std)
    attenuation = np.clip(1.0 - np.abs(cloud), 0.0, 1.0)
    irradiance = np.clip(arc * attenuation, 0.0, 1.0)
    return WeatherSeries(step_minutes=step_minutes, t_out=t_out, irradiance=irradiance)


def save_weather(series: WeatherSeries, path: str | Path) -> None:
    """Columnar text export: minutes since start, outdoor temp, irradiance."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp_min", "t_out_c", "irradiance"])
        for k in range(series.n_steps):
            writer.writerow(
                [
                    k * series.step_minutes,
                    repr(float(series.t_out[k])),
                    repr(float(series.irradiance[k])),
                ]
            )


def load_weather(path: str | Path) -> WeatherSeries:
    """Parse a save_weather() file (or externally produced equivalent)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["timestamp_min", "t_out_c", "irradiance"]:
            raise ValueError(f"unrecognized weather file header: {header}")
        stamps, temps, irr = [], [], []
        for row in reader:
            stamps.append(int(row[0]))
            temps.append(float(row[1]))
            irr.append(float(row[2]))
    if len(stamps) < 2:
        raise ValueError("weather file needs at least two rows")
    step = stamps[1] - stamps[0]
    if step <= 0 or any(b - a != step for a, b in zip(stamps, stamps[1:])):
        raise ValueError("weather timestamps must be uniformly increasing")
    t_out = np.array(temps)
    irradiance = np.array(irr)
    if not np.all(np.isfinite(t_out)):
        raise ValueError("outdoor temperatures must be finite")
    if np.any(irradiance < 0.0) or np.any(irradiance > 1.0):
        raise ValueError("irradiance values must lie in [0, 1]")
    return WeatherSeries(step_minutes=step, t_out=t_out, irradiance=irradiance)
