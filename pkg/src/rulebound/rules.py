"""Expert rules that narrow the allowed action interval near comfort limits.

An action is a scalar in [-1, 1]: -1 is full cooling (here: heater off),
+1 is full heating. A rule maps the current room temperature and comfort
band to a sub-interval [low, high] of that range. The comfort rule uses a
quadratic ramp: once the temperature drops within `n` degrees of the lower
comfort bound (minus a dead margin `m`) the minimum allowed action rises
smoothly from -1, reaching +1 (forced full heating) at `n` degrees below
the bound. The mirror image caps the maximum action near the upper bound.

Both ramps can never be active at once (the comfort band is non-empty), so
low <= high holds for every temperature. All functions broadcast over
numpy arrays and preserve float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

ACTION_LOW = -1.0
ACTION_HIGH = 1.0


class Bounds(NamedTuple):
    """An allowed action interval; scalar or elementwise arrays."""

    low: float | np.ndarray
    high: float | np.ndarray


GLOBAL_BOUNDS = Bounds(ACTION_LOW, ACTION_HIGH)


@dataclass(frozen=True)
class GlobalRule:
    """No expert knowledge: every action in [-1, 1] is always allowed."""

    def bounds(self, temperature, lower, upper) -> Bounds:
        t = np.asarray(temperature, dtype=np.float64)
        if t.ndim == 0:
            return Bounds(ACTION_LOW, ACTION_HIGH)
        return Bounds(np.full(t.shape, ACTION_LOW), np.full(t.shape, ACTION_HIGH))


@dataclass(frozen=True)
class ComfortRule:
    """Quadratic ramp bounds with dead margin `m` and ramp end `n` (degrees).

    Requires 0 <= m < n. Small n means the rule only reacts close to the
    comfort bound; m > 0 delays the ramp until the band is already broken
    by m degrees.
    """

    m: float = 0.0
    n: float = 0.25

    def __post_init__(self) -> None:
        if not 0.0 <= self.m:
            raise ValueError(f"margin m must be non-negative, got {self.m}")
        if not self.m < self.n:
            raise ValueError(f"ramp end n must exceed margin m, got m={self.m}, n={self.n}")

    def bounds(self, temperature, lower, upper) -> Bounds:
        t = np.asarray(temperature, dtype=np.float64)
        lo = np.asarray(lower, dtype=np.float64)
        hi = np.asarray(upper, dtype=np.float64)
        span = self.n - self.m
        cold = np.clip(((lo - self.m) - t) / span, 0.0, 1.0)
        hot = np.clip((t - (hi + self.m)) / span, 0.0, 1.0)
        a_min = 2.0 * cold * cold - 1.0
        a_max = 1.0 - 2.0 * hot * hot
        return Bounds(a_min, a_max)


def clip_action(action, bounds: Bounds):
    """Project an action (scalar or array) onto the allowed interval."""
    return np.clip(action, bounds.low, bounds.high)


def constrain_action(action, bounds: Bounds):
    """Clip and report saturation.

    Returns (applied, saturated) where saturated marks entries the clip
    actually moved. An action exactly on a bound is not saturated.
    """
    applied = np.clip(action, bounds.low, bounds.high)
    saturated = applied != np.asarray(action, dtype=np.float64)
    return applied, saturated
