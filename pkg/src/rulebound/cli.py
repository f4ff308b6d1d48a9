"""Command-line interface.

Every command is a thin client of the HTTP service: by default requests
are dispatched in-process (no socket, no running server required), and
--server redirects them to a remote instance. On failure the last line
on stderr is a single JSON object with an "error" key and the exit code
is nonzero.
"""

from __future__ import annotations

import asyncio
import functools
import json
import sys
from pathlib import Path

import click
import httpx
import yaml


class ClientError(RuntimeError):
    def __init__(self, detail: str, status_code: int):
        super().__init__(detail)
        self.status_code = status_code


class ServiceClient:
    """Synchronous client: in-process ASGI by default, HTTP with --server."""

    def __init__(self, server: str | None):
        self._server = server

    def _request(self, method: str, path: str, payload: dict | None) -> httpx.Response:
        if self._server is not None:
            with httpx.Client(base_url=self._server, timeout=None) as client:
                return client.request(method, path, json=payload)

        from .service.app import app

        async def dispatch() -> httpx.Response:
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://rulebound", timeout=None
            ) as client:
                return await client.request(method, path, json=payload)

        return asyncio.run(dispatch())

    def get(self, path: str) -> dict:
        return self._handle(self._request("GET", path, None))

    def post(self, path: str, payload: dict) -> dict:
        return self._handle(self._request("POST", path, payload))

    @staticmethod
    def _handle(response: httpx.Response) -> dict:
        if response.status_code >= 400:
            try:
                body = response.json()
            except ValueError:
                body = {}
            detail = body.get("detail", response.text)
            raise ClientError(_render_detail(detail), response.status_code)
        return response.json()


def _render_detail(detail) -> str:
    if isinstance(detail, str):
        return detail
    if isinstance(detail, list):  # pydantic validation errors
        parts = []
        for item in detail:
            location = ".".join(str(piece) for piece in item.get("loc", []))
            parts.append(f"{location}: {item.get('msg', 'invalid')}")
        return "; ".join(parts)
    return json.dumps(detail)


def _load_document(path: str) -> dict:
    data = yaml.safe_load(Path(path).read_text())
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} is not a key-value document")
    return data


def _fail(exc: Exception) -> None:
    click.echo(json.dumps({"error": str(exc)}), err=True)
    sys.exit(1)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ClientError, ValueError, OSError, yaml.YAMLError) as exc:
            _fail(exc)

    return wrapper


@click.group()
@click.option("--server", default=None, envvar="RULEBOUND_SERVER",
              help="URL of a running service; default runs in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Rule-constrained actor-critic agents for room temperature control."""
    ctx.obj = server


def _client(ctx: click.Context) -> ServiceClient:
    return ServiceClient(ctx.obj)


def _echo_artifacts(paths) -> None:
    for path in paths:
        click.echo(f"artifact: {path}")


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Train only this seed.")
@click.option("--label", default=None, help="Artifact name prefix (default: variant).")
@click.option("--out", default=None, help="Output directory override.")
@click.pass_context
@_guarded
def train(ctx: click.Context, config: str, seed: int | None, label: str | None,
          out: str | None) -> None:
    """Train an agent from a run config file."""
    payload = {
        "config": _load_document(config),
        "seed": seed,
        "label": label,
        "output_dir": out,
    }
    response = _client(ctx).post("/train", payload)
    for run in response["runs"]:
        reached = run["epochs_to_threshold"]
        reached_text = "never" if reached is None else f"epoch {reached}"
        if run["best_reward"] is None:
            best_text = "n/a"
        else:
            best_text = f"{run['best_reward']:.6f} at epoch {run['best_epoch']}"
        click.echo(
            f"seed {run['seed']}: threshold {run['threshold']:.6f} "
            f"reached {reached_text}, best reward {best_text}"
        )
    _echo_artifacts(response["artifacts"])


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.argument("checkpoint", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None,
              help="Seed selecting weather and eval set (default: first in config).")
@click.pass_context
@_guarded
def evaluate(ctx: click.Context, config: str, checkpoint: str, seed: int | None) -> None:
    """Evaluate a checkpoint on the held-out episode set."""
    payload = {"config": _load_document(config), "checkpoint": checkpoint, "seed": seed}
    response = _client(ctx).post("/evaluate", payload)
    click.echo(f"variant: {response['variant']} (seed {response['seed']})")
    click.echo(f"mean_reward: {response['mean_reward']!r}")
    click.echo(f"violation_kh: {response['violation_kh']!r}")
    click.echo(f"energy_kwh: {response['energy_kwh']!r}")
    click.echo(f"threshold: {response['threshold']!r}")


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--workers", type=int, default=1, show_default=True,
              help="Parallel training processes.")
@click.option("--out", default=None, help="Output directory override.")
@click.pass_context
@_guarded
def compare(ctx: click.Context, config: str, workers: int, out: str | None) -> None:
    """Train several labelled runs and compare convergence speed."""
    payload = {"config": _load_document(config), "workers": workers, "output_dir": out}
    response = _client(ctx).post("/compare", payload)
    report = response["report"]
    speedups = report["speedup_vs_classical"]
    for label, run in report["runs"].items():
        median = run["median_epochs_to_threshold"]
        if median is None:
            click.echo(f"{label}: no convergence")
            continue
        line = f"{label}: median epochs-to-threshold {median:g}"
        if speedups.get(label) is not None:
            line += f" (speedup vs classical {speedups[label]:.2f}x)"
        click.echo(line)
    _echo_artifacts([response["report_path"], *response["curves"].values()])


@main.command()
@click.option("--networks", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tolerance", type=float, default=1e-4, show_default=True)
@click.pass_context
@_guarded
def gradcheck(ctx: click.Context, networks: int, seed: int, tolerance: float) -> None:
    """Verify analytic gradients against finite differences."""
    payload = {"networks": networks, "seed": seed, "tolerance": tolerance}
    response = _client(ctx).post("/gradcheck", payload)
    for check in response["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        click.echo(f"{status} {check['name']} max_rel_err {check['max_rel_err']:.3e}")
    verdict = "all gradient checks passed" if response["passed"] else "gradient checks FAILED"
    click.echo(f"{verdict} (worst {response['max_rel_err']:.3e}, tolerance {tolerance:g})")
    if not response["passed"]:
        sys.exit(1)


@main.command("export-weather")
@click.option("--days", type=int, default=240, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--step-minutes", type=int, default=15, show_default=True)
@click.option("--out", default="weather.csv", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Run config supplying the weather parameters.")
@click.pass_context
@_guarded
def export_weather(ctx: click.Context, days: int, seed: int, step_minutes: int,
                   out: str, config_path: str | None) -> None:
    """Generate a synthetic weather series and write it as CSV."""
    payload = {"days": days, "seed": seed, "step_minutes": step_minutes, "out": out}
    if config_path is not None:
        document = _load_document(config_path)
        env = document.get("env", {})
        payload["weather"] = env.get("weather", {})
        if "step_minutes" in env:
            payload["step_minutes"] = env["step_minutes"]
    response = _client(ctx).post("/weather/export", payload)
    click.echo(f"{response['n_steps']} steps over {response['days']} days")
    _echo_artifacts([response["path"]])


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
