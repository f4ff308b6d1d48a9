"""Fixed-capacity ring replay buffer over preallocated float64 arrays.

Besides the usual (s, a, r, s', done) fields each transition records two
bound pairs: the bounds actually enforced on the applied action, and the
bounds the expert rule would prescribe at s. They coincide except for the
reward-shaping variant, which acts under global bounds but is penalized
against the rule. `reward` is what the learner sees; `reward_raw` is the
unshaped environment reward kept for diagnostics.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class Batch(NamedTuple):
    obs: np.ndarray          # (B, obs_dim)
    action: np.ndarray       # (B,) applied, post-clipping
    raw_action: np.ndarray   # (B,) pre-clipping
    reward: np.ndarray       # (B,) learning signal (shaped for rs)
    reward_raw: np.ndarray   # (B,) environment reward
    next_obs: np.ndarray     # (B, obs_dim)
    done: np.ndarray         # (B,) 0.0 or 1.0
    bounds_low: np.ndarray   # (B,) enforced lower bound at s
    bounds_high: np.ndarray  # (B,) enforced upper bound at s
    rule_low: np.ndarray     # (B,) rule-prescribed lower bound at s
    rule_high: np.ndarray    # (B,) rule-prescribed upper bound at s


class ReplayBuffer:
    def __init__(self, capacity: int, obs_dim: int):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.obs_dim = obs_dim
        self._obs = np.zeros((capacity, obs_dim))
        self._action = np.zeros(capacity)
        self._raw_action = np.zeros(capacity)
        self._reward = np.zeros(capacity)
        self._reward_raw = np.zeros(capacity)
        self._next_obs = np.zeros((capacity, obs_dim))
        self._done = np.zeros(capacity)
        self._bounds_low = np.zeros(capacity)
        self._bounds_high = np.zeros(capacity)
        self._rule_low = np.zeros(capacity)
        self._rule_high = np.zeros(capacity)
        self._next = 0
        self._size = 0
        self.insertions = 0

    def __len__(self) -> int:
        return self._size

    def push(
        self,
        *,
        obs: np.ndarray,
        action: float,
        raw_action: float,
        reward: float,
        reward_raw: float,
        next_obs: np.ndarray,
        done: bool,
        bounds_low: float,
        bounds_high: float,
        rule_low: float,
        rule_high: float,
    ) -> None:
        """Insert one transition, overwriting the oldest at capacity."""
        if not np.isfinite(reward):
            raise ValueError(f"reward must be finite, got {reward}")
        if not bounds_low <= action <= bounds_high:
            raise ValueError(
                f"applied action {action} outside its recorded bounds "
                f"[{bounds_low}, {bounds_high}]"
            )
        i = self._next
        self._obs[i] = obs
        self._action[i] = action
        self._raw_action[i] = raw_action
        self._reward[i] = reward
        self._reward_raw[i] = reward_raw
        self._next_obs[i] = next_obs
        self._done[i] = 1.0 if done else 0.0
        self._bounds_low[i] = bounds_low
        self._bounds_high[i] = bounds_high
        self._rule_low[i] = rule_low
        self._rule_high[i] = rule_high
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)
        self.insertions += 1

    def sample(self, rng: np.random.Generator, batch_size: int) -> Batch:
        """Uniform i.i.d. sample with replacement; needs size >= batch_size."""
        if batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {batch_size}")
        if self._size < batch_size:
            raise ValueError(
                f"cannot sample a batch of {batch_size} from a buffer of size {self._size}"
            )
        idx = rng.integers(0, self._size, size=batch_size)
        return self.gather(idx)

    def gather(self, idx: np.ndarray) -> Batch:
        """Materialize the transitions at `idx` (copies, not views)."""
        return Batch(
            obs=self._obs[idx],
            action=self._action[idx],
            raw_action=self._raw_action[idx],
            reward=self._reward[idx],
            reward_raw=self._reward_raw[idx],
            next_obs=self._next_obs[idx],
            done=self._done[idx],
            bounds_low=self._bounds_low[idx],
            bounds_high=self._bounds_high[idx],
            rule_low=self._rule_low[idx],
            rule_high=self._rule_high[idx],
        )
