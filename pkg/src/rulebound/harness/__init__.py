"""Training and evaluation orchestration for the room-control benchmark."""

from .compare import CadenceMismatchError, compare_runs, run_compare
from .config import (
    AgentSection,
    CompareConfig,
    CompareRun,
    EnvSection,
    HarnessSection,
    RuleSection,
    RunConfig,
    WeatherSection,
    load_compare_config,
    load_run_config,
)
from .evaluate import EvalResult, EvalSet, build_eval_set, evaluate_agent, evaluate_baseline
from .protocol import EPISODE_DAYS, Protocol
from .train import (
    MetricsRow,
    SeedStreams,
    TrainingAbortedError,
    TrainingRecorder,
    TrainResult,
    seed_streams,
    train_run,
)

__all__ = [
    "AgentSection",
    "CadenceMismatchError",
    "CompareConfig",
    "CompareRun",
    "EnvSection",
    "EPISODE_DAYS",
    "EvalResult",
    "EvalSet",
    "HarnessSection",
    "MetricsRow",
    "Protocol",
    "RuleSection",
    "RunConfig",
    "SeedStreams",
    "TrainingAbortedError",
    "TrainingRecorder",
    "TrainResult",
    "WeatherSection",
    "build_eval_set",
    "compare_runs",
    "evaluate_agent",
    "evaluate_baseline",
    "load_compare_config",
    "load_run_config",
    "run_compare",
    "seed_streams",
    "train_run",
]
