"""HTTP service exposing the training, evaluation, and comparison API.

All heavy operations run synchronously in the request handler; the
service is a thin wrapper intended for one user at a time (the bundled
CLI talks to it in-process by default).
"""

from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..agents import Agent
from ..env import ScheduleError
from ..gradcheck import report_dict, run_gradcheck
from ..netio import CheckpointFormatError
from ..weather import generate_weather, save_weather
from ..harness.compare import run_compare
from ..harness.evaluate import build_eval_set, evaluate_agent, evaluate_baseline
from ..harness.protocol import Protocol
from ..harness.train import TrainingAbortedError, enforcement_rule, seed_streams, train_run
from .schemas import (
    CompareRequest,
    CompareResponse,
    EvaluateRequest,
    EvaluateResponse,
    GradcheckRequest,
    GradcheckResponse,
    HealthResponse,
    RunSummary,
    TrainRequest,
    TrainResponse,
    WeatherExportRequest,
    WeatherExportResponse,
)

app = FastAPI(title="rulebound", version=__version__)


@app.exception_handler(ScheduleError)
@app.exception_handler(CheckpointFormatError)
@app.exception_handler(ValueError)
async def _bad_request(request: Request, exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(FileNotFoundError)
async def _not_found(request: Request, exc: FileNotFoundError) -> JSONResponse:
    return JSONResponse(status_code=404, content={"detail": str(exc)})


@app.exception_handler(TrainingAbortedError)
async def _training_aborted(request: Request, exc: TrainingAbortedError) -> JSONResponse:
    return JSONResponse(
        status_code=500,
        content={"detail": str(exc), "checkpoint": str(exc.checkpoint)},
    )


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/train", response_model=TrainResponse)
def train(request: TrainRequest) -> TrainResponse:
    cfg = request.config
    seeds = [request.seed] if request.seed is not None else cfg.harness.seeds
    summaries = []
    artifacts = []
    for seed in seeds:
        result = train_run(
            cfg, seed, label=request.label, out_dir=request.output_dir
        )
        summaries.append(RunSummary(**result.summary_dict()))
        artifacts.extend(
            [str(result.metrics_path), str(result.summary_path), str(result.checkpoint_path)]
        )
    return TrainResponse(runs=summaries, artifacts=artifacts)


@app.post("/evaluate", response_model=EvaluateResponse)
def evaluate(request: EvaluateRequest) -> EvaluateResponse:
    cfg = request.config
    seed = request.seed if request.seed is not None else cfg.harness.seeds[0]
    agent = Agent.load(request.checkpoint)
    env_cfg = cfg.env.build()
    protocol = Protocol(env_cfg.steps_per_day, cfg.harness.eval_episodes)
    streams = seed_streams(seed)
    weather = generate_weather(
        protocol.weather_days, env_cfg.step_minutes, env_cfg.weather, streams.weather
    )
    eval_set = build_eval_set(protocol, env_cfg, streams.evaluation)
    rule = enforcement_rule(agent.cfg.variant, cfg.rule.build())
    result, _ = evaluate_agent(
        agent, rule, env_cfg, weather, eval_set, protocol.episode_steps
    )
    baseline = evaluate_baseline(
        env_cfg, weather, eval_set, protocol.episode_steps,
        cfg.harness.baseline_hysteresis,
    )
    return EvaluateResponse(
        variant=agent.cfg.variant,
        seed=seed,
        mean_reward=result.mean_reward,
        violation_kh=result.violation_kh,
        energy_kwh=result.energy_kwh,
        threshold=baseline.mean_reward,
        baseline=baseline._asdict(),
    )


@app.post("/compare", response_model=CompareResponse)
def compare(request: CompareRequest) -> CompareResponse:
    report = run_compare(
        request.config, out_dir=request.output_dir, workers=request.workers
    )
    return CompareResponse(
        report=report,
        report_path=report["report_path"],
        curves=report["curves"],
    )


@app.post("/gradcheck", response_model=GradcheckResponse)
def gradcheck(request: GradcheckRequest) -> GradcheckResponse:
    report = run_gradcheck(
        networks=request.networks, seed=request.seed, tolerance=request.tolerance
    )
    return GradcheckResponse(**report_dict(report))


@app.post("/weather/export", response_model=WeatherExportResponse)
def weather_export(request: WeatherExportRequest) -> WeatherExportResponse:
    series = generate_weather(
        request.days,
        request.step_minutes,
        request.weather.build(),
        np.random.default_rng(request.seed),
    )
    out = Path(request.out)
    if out.parent != Path("."):
        out.parent.mkdir(parents=True, exist_ok=True)
    save_weather(series, out)
    return WeatherExportResponse(
        path=str(out),
        n_steps=series.n_steps,
        days=request.days,
        step_minutes=request.step_minutes,
    )
