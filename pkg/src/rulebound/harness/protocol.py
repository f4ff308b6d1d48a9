"""Episode layout over the synthetic horizon.

The horizon is carved into 12-day slices. The last 3 days of every slice
are a held-out evaluation episode; training episodes are 3-day windows
sampled from day-aligned starts that never touch an evaluation day. With
the default 20 evaluation episodes this yields a 240-day horizon of which
exactly 180 days are available for training.
"""

from dataclasses import dataclass

EPISODE_DAYS = 3
SLICE_DAYS = 12
EVAL_OFFSET_DAYS = 9  # evaluation block occupies days 9..11 of each slice


@dataclass(frozen=True)
class Protocol:
    steps_per_day: int
    eval_episodes: int

    def __post_init__(self) -> None:
        if self.steps_per_day < 1:
            raise ValueError("steps_per_day must be positive")
        if self.eval_episodes < 1:
            raise ValueError("need at least one evaluation episode")

    @property
    def episode_steps(self) -> int:
        return EPISODE_DAYS * self.steps_per_day

    @property
    def horizon_days(self) -> int:
        return SLICE_DAYS * self.eval_episodes

    @property
    def weather_days(self) -> int:
        # one spare day so the final episode can read the state one step
        # past its last action
        return self.horizon_days + 1

    def eval_starts(self) -> list[int]:
        """Absolute step indices of the held-out evaluation episodes."""
        return [
            (SLICE_DAYS * k + EVAL_OFFSET_DAYS) * self.steps_per_day
            for k in range(self.eval_episodes)
        ]

    def training_start_days(self) -> list[int]:
        """Days whose 3-day episode avoids every evaluation day."""
        return [
            day
            for day in range(self.horizon_days)
            if (day % SLICE_DAYS) + EPISODE_DAYS <= EVAL_OFFSET_DAYS
        ]

    def training_starts(self) -> list[int]:
        return [day * self.steps_per_day for day in self.training_start_days()]
