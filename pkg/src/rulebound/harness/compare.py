"""Multi-run comparison: convergence speed against the rule-based baseline.

Every run trains on the same environment, seeds, and evaluation set; the
report aggregates epochs-to-threshold per run, takes medians over seeds,
and expresses speedups relative to the first classical run.
"""

from __future__ import annotations

import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import CompareConfig, RunConfig
from .train import TrainResult, train_run

NO_CONVERGENCE = "no convergence"


class CadenceMismatchError(ValueError):
    """Runs with different evaluation cadences cannot be aligned by epoch."""


def _train_job(args: tuple[RunConfig, int, str, str]) -> TrainResult:
    cfg, seed, label, out_dir = args
    return train_run(cfg, seed, label=label, out_dir=out_dir)


def compare_runs(
    runs: list[tuple[str, RunConfig]],
    out_dir: str | Path,
    workers: int = 1,
) -> dict:
    """Train and compare labelled runs; returns the report dictionary.

    Writes one comparison report JSON plus one plot-ready curve CSV per
    run under out_dir.
    """
    if len(runs) < 2:
        raise ValueError("compare needs at least two runs")
    labels = [label for label, _ in runs]
    if len(set(labels)) != len(labels):
        raise ValueError("run labels must be unique")
    cadences = {cfg.harness.eval_cadence for _, cfg in runs}
    if len(cadences) > 1:
        raise CadenceMismatchError(
            f"evaluation cadences differ across runs: {sorted(cadences)}"
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    jobs = [
        (cfg, seed, label, str(out))
        for label, cfg in runs
        for seed in cfg.harness.seeds
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_train_job, jobs))
    else:
        results = [_train_job(job) for job in jobs]

    by_label: dict[str, list[TrainResult]] = {label: [] for label in labels}
    for result in results:
        by_label[result.label].append(result)

    run_reports: dict[str, dict] = {}
    medians: dict[str, float | None] = {}
    for label, cfg in runs:
        seed_results = by_label[label]
        converged = [r.epochs_to_threshold for r in seed_results if r.epochs_to_threshold is not None]
        median = float(statistics.median(converged)) if converged else None
        medians[label] = median
        best_rewards = [r.best_reward for r in seed_results if r.best_reward is not None]
        run_reports[label] = {
            "variant": cfg.agent.variant,
            "rule": {"m": cfg.rule.m, "n": cfg.rule.n},
            "penalty_weight": cfg.agent.penalty_weight,
            "per_seed": {
                str(r.seed): {
                    "epochs_to_threshold": r.epochs_to_threshold,
                    "convergence": (
                        r.epochs_to_threshold
                        if r.epochs_to_threshold is not None
                        else NO_CONVERGENCE
                    ),
                    "best_reward": r.best_reward,
                    "best_epoch": r.best_epoch,
                    "threshold": r.threshold,
                    "epochs_run": r.epochs_run,
                    "stopped_early": r.stopped_early,
                }
                for r in seed_results
            },
            "median_epochs_to_threshold": median,
            "median_best_reward": (
                float(statistics.median(best_rewards)) if best_rewards else None
            ),
            "converged_seeds": len(converged),
            "total_seeds": len(seed_results),
        }

    reference = next(
        (label for label, cfg in runs if cfg.agent.variant == "classical"), None
    )
    speedups: dict[str, float | None] = {}
    if reference is not None and medians[reference] is not None:
        for label in labels:
            median = medians[label]
            speedups[label] = medians[reference] / median if median else None
    else:
        speedups = {label: None for label in labels}

    curves: dict[str, str] = {}
    for label, cfg in runs:
        curve_path = out / f"{label}.curve.csv"
        _write_curve(curve_path, cfg, by_label[label])
        curves[label] = str(curve_path)

    harness = runs[0][1].harness
    report = {
        "protocol": {
            "epochs": harness.epochs,
            "eval_cadence": harness.eval_cadence,
            "eval_episodes": harness.eval_episodes,
            "seeds": list(harness.seeds),
            "epoch_definition": "one epoch = one training day (96 steps of 15 min "
            "by default); epochs-to-threshold therefore counts training days",
            "threshold_definition": "per-seed evaluation reward of the bang-bang "
            "baseline controller on the held-out episode set",
        },
        "threshold_per_seed": {
            str(r.seed): r.threshold for r in by_label[labels[0]]
        },
        "reference": reference,
        "runs": run_reports,
        "speedup_vs_classical": speedups,
        "curves": curves,
    }
    report_path = out / "comparison.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    report["report_path"] = str(report_path)
    return report


def run_compare(cfg: CompareConfig, out_dir: str | Path | None = None, workers: int = 1) -> dict:
    """Execute a comparison document."""
    runs = [(run.label, cfg.run_config(run)) for run in cfg.runs]
    return compare_runs(runs, out_dir if out_dir is not None else cfg.harness.output_dir, workers)


def _write_curve(path: Path, cfg: RunConfig, seed_results: list[TrainResult]) -> None:
    """Plot-ready learning curve: epoch column plus one reward column per seed."""
    seeds = [r.seed for r in seed_results]
    reward_by_seed = [
        {row.epoch: row.mean_test_reward for row in r.rows} for r in seed_results
    ]
    epochs = sorted({epoch for rewards in reward_by_seed for epoch in rewards})
    with open(path, "w", newline="") as fh:
        header = ["epoch"] + [f"mean_test_reward_seed{seed}" for seed in seeds]
        fh.write(",".join(header) + "\n")
        for epoch in epochs:
            cells = [str(epoch)]
            for rewards in reward_by_seed:
                value = rewards.get(epoch)
                cells.append("" if value is None else repr(float(value)))
            fh.write(",".join(cells) + "\n")
