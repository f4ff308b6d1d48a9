"""Request and response bodies for the HTTP service.

The train/evaluate/compare requests embed the same strict config
documents the YAML files use, so a request body is exactly a config file
plus a few overrides.
"""

from pydantic import BaseModel, ConfigDict, Field

from ..harness.config import CompareConfig, RunConfig, WeatherSection


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HealthResponse(StrictModel):
    status: str
    version: str


class TrainRequest(StrictModel):
    config: RunConfig
    seed: int | None = None          # run only this seed instead of the config list
    label: str | None = None
    output_dir: str | None = None


class RunSummary(StrictModel):
    label: str
    seed: int
    variant: str
    threshold: float
    baseline: dict[str, float]
    best_reward: float | None
    best_epoch: int | None
    epochs_to_threshold: int | None
    epochs_run: int
    stopped_early: bool
    artifacts: dict[str, str]
    error: str | None = None


class TrainResponse(StrictModel):
    runs: list[RunSummary]
    artifacts: list[str]


class EvaluateRequest(StrictModel):
    config: RunConfig
    checkpoint: str
    seed: int | None = None          # defaults to the first configured seed


class EvaluateResponse(StrictModel):
    variant: str
    seed: int
    mean_reward: float
    violation_kh: float
    energy_kwh: float
    threshold: float
    baseline: dict[str, float]


class CompareRequest(StrictModel):
    config: CompareConfig
    workers: int = Field(default=1, ge=1)
    output_dir: str | None = None


class CompareResponse(StrictModel):
    report: dict
    report_path: str
    curves: dict[str, str]


class GradcheckRequest(StrictModel):
    networks: int = Field(default=20, ge=1)
    seed: int = 0
    tolerance: float = Field(default=1e-4, gt=0.0)


class GradcheckResponse(StrictModel):
    networks: int
    seed: int
    tolerance: float
    passed: bool
    max_rel_err: float
    checks: list[dict]


class WeatherExportRequest(StrictModel):
    days: int = Field(default=240, ge=1)
    seed: int = 0
    step_minutes: int = 15
    weather: WeatherSection = Field(default_factory=WeatherSection)
    out: str = "weather.csv"


class WeatherExportResponse(StrictModel):
    path: str
    n_steps: int
    days: int
    step_minutes: int
