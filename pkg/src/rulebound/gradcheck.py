"""Finite-difference verification of every analytic gradient path.

Each randomly shaped network is checked three ways: a critic-style mean
squared error loss over the parameters, the actor objective (critic
ascent plus the quadratic bound penalty with a frozen clip reference)
over the actor parameters, and the gradient with respect to the network
input, which is the path an actor update takes through the critic.

Relative error uses the floor max(|analytic|, |numeric|, 1e-4): losses
are scaled to order one, a genuinely wrong gradient shows up far above
the floor, and the floor keeps finite-difference noise on near-zero
entries from registering as error.
"""

from typing import NamedTuple

import numpy as np

from .agents import Agent, AgentConfig
from .nn import Network, backward, finite_difference_gradient, forward, forward_cached, mlp
from .replay import Batch


class CheckResult(NamedTuple):
    name: str
    max_rel_err: float
    passed: bool


class GradCheckReport(NamedTuple):
    networks: int
    seed: int
    tolerance: float
    checks: list[CheckResult]
    passed: bool
    max_rel_err: float


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-4)
    return float(np.max(np.abs(analytic - numeric) / scale))


def _max_param_error(net: Network, grads, fd) -> float:
    worst = 0.0
    for gw, gb, fw, fb in zip(grads.weights, grads.biases, fd.weights, fd.biases):
        worst = max(worst, _relative_error(gw, fw), _relative_error(gb, fb))
    return worst


def _random_dims(rng: np.random.Generator) -> tuple[int, list[int], int, int]:
    in_dim = int(rng.integers(2, 6))
    hidden = [int(rng.integers(3, 9)) for _ in range(int(rng.integers(1, 3)))]
    out_dim = int(rng.integers(1, 4))
    batch = int(rng.integers(2, 7))
    return in_dim, hidden, out_dim, batch


def check_mse_loss(rng: np.random.Generator, index: int) -> CheckResult:
    """Critic-style loss: L = mean((net(x) - y)^2) over all outputs."""
    in_dim, hidden, out_dim, batch = _random_dims(rng)
    activation = ("linear", "tanh")[index % 2]
    net = mlp(in_dim, hidden, out_dim, output_activation=activation, rng=rng)
    x = rng.uniform(-1.0, 1.0, size=(batch, in_dim))
    y = rng.uniform(-1.0, 1.0, size=(batch, out_dim))

    out, cache = forward_cached(net, x)
    cotangent = 2.0 * (out - y) / out.size
    grads, _ = backward(net, cache, cotangent)

    def loss(n: Network) -> float:
        return float(np.mean((forward(n, x) - y) ** 2))

    fd = finite_difference_gradient(net, loss)
    return CheckResult(f"mse-loss-{index}", _max_param_error(net, grads, fd), True)


def check_input_gradient(rng: np.random.Generator, index: int) -> CheckResult:
    """Gradient with respect to the input, the actor-through-critic path."""
    in_dim, hidden, out_dim, batch = _random_dims(rng)
    net = mlp(in_dim, hidden, out_dim, rng=rng)
    x = rng.uniform(-1.0, 1.0, size=(batch, in_dim))
    weights = rng.uniform(-1.0, 1.0, size=(batch, out_dim))

    _, cache = forward_cached(net, x)
    _, input_grad = backward(net, cache, weights / batch)

    numeric = np.zeros_like(x)
    step = 1e-6
    for i in range(batch):
        for j in range(in_dim):
            bumped = x.copy()
            bumped[i, j] = x[i, j] + step
            up = float(np.mean(np.sum(forward(net, bumped) * weights, axis=1)))
            bumped[i, j] = x[i, j] - step
            down = float(np.mean(np.sum(forward(net, bumped) * weights, axis=1)))
            numeric[i, j] = (up - down) / (2.0 * step)

    return CheckResult(
        f"input-gradient-{index}", _relative_error(input_grad, numeric), True
    )


def check_actor_objective(rng: np.random.Generator, index: int) -> CheckResult:
    """Actor loss with the bound penalty, differentiated through the critic.

    Alternates between the penalty-free classical case and the "ea" case
    with saturating bounds and a frozen clip reference.
    """
    variant = ("classical", "ea")[index % 2]
    obs_dim = int(rng.integers(2, 5))
    batch = int(rng.integers(2, 7))
    cfg = AgentConfig(
        variant=variant,
        obs_dim=obs_dim,
        hidden=(int(rng.integers(3, 7)), int(rng.integers(3, 7))),
        batch_size=4,
        warmup_steps=4,
        buffer_capacity=16,
        penalty_weight=float(rng.uniform(1.0, 20.0)) if variant == "ea" else None,
    )
    agent = Agent(cfg, rng)
    obs = rng.uniform(-1.0, 1.0, size=(batch, obs_dim))
    # bounds tight enough that some raw actions saturate
    low = rng.uniform(-0.3, 0.0, size=batch)
    high = rng.uniform(0.0, 0.3, size=batch)
    filler = np.zeros(batch)
    batch_data = Batch(
        obs=obs,
        action=filler,
        raw_action=filler,
        reward=filler,
        reward_raw=filler,
        next_obs=obs,
        done=filler,
        bounds_low=low,
        bounds_high=high,
        rule_low=low,
        rule_high=high,
    )
    grads, _ = agent.actor_gradients(batch_data)

    pi0 = forward(agent.actor, obs)
    reference = np.clip(pi0, low[:, None], high[:, None])
    lam = cfg.penalty_weight if variant == "ea" else 0.0

    def loss(actor: Network) -> float:
        pi = forward(actor, obs)
        q = forward(agent.critic1, np.concatenate([obs, pi], axis=1))
        penalty = 0.5 * lam * float(np.mean((pi - reference) ** 2))
        return -float(np.mean(q)) + penalty

    fd = finite_difference_gradient(agent.actor, loss)
    return CheckResult(
        f"actor-objective-{variant}-{index}",
        _max_param_error(agent.actor, grads, fd),
        True,
    )


def run_gradcheck(networks: int = 20, seed: int = 0, tolerance: float = 1e-4) -> GradCheckReport:
    """Run the full suite over `networks` random configurations."""
    if networks < 1:
        raise ValueError("networks must be positive")
    rng = np.random.default_rng(seed)
    checks: list[CheckResult] = []
    for index in range(networks):
        for check in (check_mse_loss, check_input_gradient, check_actor_objective):
            result = check(rng, index)
            checks.append(result._replace(passed=result.max_rel_err < tolerance))
    worst = max(check.max_rel_err for check in checks)
    return GradCheckReport(
        networks=networks,
        seed=seed,
        tolerance=tolerance,
        checks=checks,
        passed=all(check.passed for check in checks),
        max_rel_err=worst,
    )


def report_dict(report: GradCheckReport) -> dict:
    return {
        "networks": report.networks,
        "seed": report.seed,
        "tolerance": report.tolerance,
        "passed": report.passed,
        "max_rel_err": report.max_rel_err,
        "checks": [
            {"name": c.name, "max_rel_err": c.max_rel_err, "passed": c.passed}
            for c in report.checks
        ],
    }
