"""TD3-style deterministic actor-critic agent with three variants.

variant "classical"
    Plain TD3: global action bounds everywhere, classical actor gradient.
variant "ea" (expert-action saturation)
    The expert rule clips every applied action, at training and test time,
    and the actor objective gains a penalty -(penalty_weight/2) * e^2 with
    e = pi(s) - clip(pi(s), rule bounds at s). The clipped reference is a
    constant in differentiation, so on batches where no state is saturated
    the parameter update is bit-for-bit the classical one; saturated states
    add penalty_weight * grad(pi)^T e, steering the policy back inside the
    allowed interval even though the clip itself has zero subgradient.
variant "rs" (reward shaping)
    Classical TD3 updates and global bounds, but the stored reward is
    shaped: r - (penalty_weight/2) * (raw - rule-clipped raw)^2. The rule
    only ever speaks through the reward, and therefore through the critic.

All three variants share one actor-update code path; the penalty term is
always computed (with an effective weight of zero outside "ea"), which is
what makes the interior-batch equivalence exact rather than approximate.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import netio
from .nn import GradientBuffer, Network, backward, forward, forward_cached, mlp
from .optim import AdamState, adam_init, adam_step, polyak_update
from .replay import Batch, ReplayBuffer
from .rules import ACTION_HIGH, ACTION_LOW, Bounds

VARIANTS = ("classical", "ea", "rs")

# penalty weights used when the config leaves penalty_weight unset
DEFAULT_PENALTY = {"classical": 0.0, "ea": 100.0, "rs": 10.0}


class DivergenceError(RuntimeError):
    """Raised when training produces non-finite targets or losses."""


@dataclass
class AgentConfig:
    variant: str = "classical"
    obs_dim: int = 7
    discount: float = 0.99
    exploration_noise_std: float = 0.1
    penalty_weight: float | None = None
    tau: float = 0.005
    policy_delay: int = 2
    target_noise_std: float = 0.2
    target_noise_clip: float = 0.5
    batch_size: int = 256
    buffer_capacity: int = 1_000_000
    warmup_steps: int = 1000
    hidden: tuple[int, ...] = (64, 64)
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.penalty_weight is None:
            self.penalty_weight = DEFAULT_PENALTY[self.variant]
        self.hidden = tuple(int(h) for h in self.hidden)
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ValueError(f"hidden sizes must be positive, got {self.hidden}")
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must lie in (0, 1), got {self.discount}")
        if self.exploration_noise_std < 0.0:
            raise ValueError("exploration_noise_std must be non-negative")
        if self.penalty_weight < 0.0:
            raise ValueError("penalty_weight must be non-negative")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if self.policy_delay < 1:
            raise ValueError("policy_delay must be a positive integer")
        if self.target_noise_std < 0.0 or self.target_noise_clip < 0.0:
            raise ValueError("target noise parameters must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.buffer_capacity < self.batch_size:
            raise ValueError("buffer_capacity must be at least batch_size")
        if self.warmup_steps < self.batch_size:
            raise ValueError("warmup_steps must be at least batch_size")
        if self.obs_dim < 1:
            raise ValueError("obs_dim must be positive")
        if self.actor_lr <= 0.0 or self.critic_lr <= 0.0:
            raise ValueError("learning rates must be positive")


class CriticUpdateResult(NamedTuple):
    loss1: float
    loss2: float
    targets: np.ndarray    # (B,) TD targets y
    bootstrap: np.ndarray  # (B,) discount * (1 - done) * min target-critic value


class ActorUpdateResult(NamedTuple):
    loss: float
    penalty: float          # value of the (lambda/2) * mean(e^2) term
    saturation_frac: float  # fraction of batch states with pi outside bounds


def shaped_reward(reward: float, raw_action, constrained_action, penalty_weight: float):
    """Reward with the quadratic rule-deviation penalty folded in.

    Used by the "rs" variant before a transition enters the replay buffer,
    so the critic learns penalized values.
    """
    diff = np.asarray(raw_action, dtype=np.float64) - constrained_action
    return reward - 0.5 * penalty_weight * diff * diff


class Agent:
    """One TD3 learner: six networks, three optimizers, one replay buffer."""

    NETWORK_NAMES = (
        "actor", "critic1", "critic2",
        "target_actor", "target_critic1", "target_critic2",
    )

    def __init__(self, cfg: AgentConfig, rng: np.random.Generator):
        self.cfg = cfg
        d = cfg.obs_dim
        self.actor = mlp(d, cfg.hidden, 1, output_activation="tanh", rng=rng)
        self.critic1 = mlp(d + 1, cfg.hidden, 1, rng=rng)
        self.critic2 = mlp(d + 1, cfg.hidden, 1, rng=rng)
        self.target_actor = self.actor.clone()
        self.target_critic1 = self.critic1.clone()
        self.target_critic2 = self.critic2.clone()
        self.actor_opt = adam_init(self.actor, cfg.actor_lr)
        self.critic1_opt = adam_init(self.critic1, cfg.critic_lr)
        self.critic2_opt = adam_init(self.critic2, cfg.critic_lr)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, d)
        self.critic_updates = 0
        self.actor_updates = 0

    # ---------------------------------------------------------------- acting

    def policy(self, obs: np.ndarray) -> float:
        """Deterministic action for one observation."""
        return float(forward(self.actor, obs)[0])

    def policy_batch(self, obs: np.ndarray) -> np.ndarray:
        """Deterministic actions for a (B, obs_dim) block, shape (B,)."""
        return forward(self.actor, obs)[:, 0]

    def act(
        self,
        obs: np.ndarray,
        bounds: Bounds,
        noise_std: float,
        rng: np.random.Generator | None = None,
    ) -> tuple[float, float]:
        """Exploratory action: returns (applied, raw).

        raw = pi(s) + gaussian noise; applied = clip(raw, bounds). With
        noise_std = 0 no random numbers are drawn, so deterministic
        evaluation never advances an RNG stream.
        """
        raw = self.policy(obs)
        if noise_std > 0.0:
            if rng is None:
                raise ValueError("noise_std > 0 requires an rng")
            raw += noise_std * rng.standard_normal()
        applied = float(np.clip(raw, bounds.low, bounds.high))
        return applied, raw

    # -------------------------------------------------------------- learning

    def critic_update(self, batch: Batch, rng: np.random.Generator) -> CriticUpdateResult:
        """One TD step on both critics against the shared smoothed target."""
        cfg = self.cfg
        n = batch.obs.shape[0]
        noise = np.clip(
            cfg.target_noise_std * rng.standard_normal((n, 1)),
            -cfg.target_noise_clip,
            cfg.target_noise_clip,
        )
        next_action = np.clip(
            forward(self.target_actor, batch.next_obs) + noise, ACTION_LOW, ACTION_HIGH
        )
        next_x = np.concatenate([batch.next_obs, next_action], axis=1)
        q_min = np.minimum(
            forward(self.target_critic1, next_x), forward(self.target_critic2, next_x)
        )
        bootstrap = cfg.discount * (1.0 - batch.done)[:, None] * q_min
        y = batch.reward[:, None] + bootstrap
        if not np.all(np.isfinite(y)):
            bad = int(np.count_nonzero(~np.isfinite(y)))
            raise DivergenceError(
                f"critic target contains {bad} non-finite values; training has diverged"
            )
        x = np.concatenate([batch.obs, batch.action[:, None]], axis=1)
        losses = []
        for critic, opt in (
            (self.critic1, self.critic1_opt),
            (self.critic2, self.critic2_opt),
        ):
            q, cache = forward_cached(critic, x)
            err = q - y
            losses.append(float(np.mean(err * err)))
            grads, _ = backward(critic, cache, (2.0 / n) * err)
            adam_step(critic, grads, opt)
        self.critic_updates += 1
        return CriticUpdateResult(losses[0], losses[1], y[:, 0].copy(), bootstrap[:, 0].copy())

    def actor_gradients(self, batch: Batch) -> tuple[GradientBuffer, ActorUpdateResult]:
        """Gradients of the actor loss without applying them.

        Loss = -(1/B) sum[Q1(s, pi(s)) - (lam/2) (pi(s) - clip(pi(s)))^2]
        with the clipped reference held constant. The penalty term is
        evaluated unconditionally with lam = 0 outside the "ea" variant so
        every variant runs the identical sequence of float operations.
        """
        cfg = self.cfg
        lam = cfg.penalty_weight if cfg.variant == "ea" else 0.0
        n = batch.obs.shape[0]
        pi, cache = forward_cached(self.actor, batch.obs)
        reference = np.clip(pi, batch.bounds_low[:, None], batch.bounds_high[:, None])
        e = pi - reference
        x = np.concatenate([batch.obs, pi], axis=1)
        q, q_cache = forward_cached(self.critic1, x)
        penalty = 0.5 * lam * float(np.mean(e * e))
        loss = -float(np.mean(q)) + penalty
        _, gx = backward(self.critic1, q_cache, np.full((n, 1), -1.0 / n))
        cot = gx[:, cfg.obs_dim:] + (lam / n) * e
        grads, _ = backward(self.actor, cache, cot)
        stats = ActorUpdateResult(loss, penalty, float(np.mean(e != 0.0)))
        return grads, stats

    def actor_update(self, batch: Batch) -> ActorUpdateResult:
        grads, stats = self.actor_gradients(batch)
        adam_step(self.actor, grads, self.actor_opt)
        self.actor_updates += 1
        return stats

    def target_update(self) -> None:
        tau = self.cfg.tau
        polyak_update(self.target_actor, self.actor, tau)
        polyak_update(self.target_critic1, self.critic1, tau)
        polyak_update(self.target_critic2, self.critic2, tau)

    # ------------------------------------------------------------ checkpoint

    def networks(self) -> dict[str, Network]:
        return {name: getattr(self, name) for name in self.NETWORK_NAMES}

    def save(self, path: str | Path) -> None:
        """Write a single-file checkpoint: manifest + networks + moments."""
        cfg_dict = asdict(self.cfg)
        cfg_dict["hidden"] = list(self.cfg.hidden)
        manifest = {
            "format": "rulebound-agent",
            "version": 1,
            "config": cfg_dict,
            "counters": {
                "critic_updates": self.critic_updates,
                "actor_updates": self.actor_updates,
            },
            "optimizers": {
                name: {"step_count": opt.step_count}
                for name, opt in self._optimizers().items()
            },
        }
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_STORED) as zf:
            self._write(zf, "manifest.json",
                        json.dumps(manifest, indent=2, sort_keys=True).encode())
            for name, net in self.networks().items():
                self._write(zf, f"networks/{name}.rbnc", netio.network_to_bytes(net))
            for name, opt in self._optimizers().items():
                for part, moments in (("m", opt.m), ("v", opt.v)):
                    self._write(
                        zf,
                        f"optim/{name}.{part}.bin",
                        netio.params_to_bytes(self._flatten(moments)),
                    )
        Path(path).write_bytes(buf.getvalue())

    @classmethod
    def load(cls, path: str | Path) -> "Agent":
        with zipfile.ZipFile(Path(path)) as zf:
            try:
                manifest = json.loads(zf.read("manifest.json"))
            except KeyError as exc:
                raise netio.CheckpointFormatError("checkpoint has no manifest.json") from exc
            if manifest.get("format") != "rulebound-agent":
                raise netio.CheckpointFormatError(
                    f"not an agent checkpoint: format={manifest.get('format')!r}"
                )
            if manifest.get("version") != 1:
                raise netio.CheckpointFormatError(
                    f"unsupported checkpoint version {manifest.get('version')}"
                )
            cfg = AgentConfig(**manifest["config"])
            agent = cls(cfg, rng=np.random.default_rng(0))
            for name in cls.NETWORK_NAMES:
                net = netio.network_from_bytes(zf.read(f"networks/{name}.rbnc"))
                setattr(agent, name, net)
            agent.actor_opt = agent._load_opt(zf, "actor", agent.actor, cfg.actor_lr, manifest)
            agent.critic1_opt = agent._load_opt(zf, "critic1", agent.critic1, cfg.critic_lr, manifest)
            agent.critic2_opt = agent._load_opt(zf, "critic2", agent.critic2, cfg.critic_lr, manifest)
            agent.critic_updates = manifest["counters"]["critic_updates"]
            agent.actor_updates = manifest["counters"]["actor_updates"]
        return agent

    def _optimizers(self) -> dict[str, AdamState]:
        return {
            "actor": self.actor_opt,
            "critic1": self.critic1_opt,
            "critic2": self.critic2_opt,
        }

    @staticmethod
    def _flatten(buf: GradientBuffer) -> list[np.ndarray]:
        out = []
        for w, b in zip(buf.weights, buf.biases):
            out.extend((w, b))
        return out

    @staticmethod
    def _write(zf: zipfile.ZipFile, name: str, data: bytes) -> None:
        # fixed timestamp so identical agents serialize to identical bytes
        info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
        zf.writestr(info, data)

    def _load_opt(
        self,
        zf: zipfile.ZipFile,
        name: str,
        net: Network,
        lr: float,
        manifest: dict,
    ) -> AdamState:
        state = adam_init(net, lr)
        state.step_count = manifest["optimizers"][name]["step_count"]
        for part, target in (("m", state.m), ("v", state.v)):
            arrays = netio.params_from_bytes(
                zf.read(f"optim/{name}.{part}.bin"), like=self._flatten(target)
            )
            for dst, src in zip(self._flatten(target), arrays):
                dst[...] = src
        return state

    # ------------------------------------------------------------- utilities

    def parameters_equal(self, other: "Agent") -> bool:
        """Bitwise equality of every parameter of every network.

        Byte comparison, so it distinguishes -0.0 from +0.0, which float
        equality would paper over.
        """
        for name in self.NETWORK_NAMES:
            a, b = getattr(self, name), getattr(other, name)
            for la, lb in zip(a.layers, b.layers):
                if la.weights.tobytes() != lb.weights.tobytes():
                    return False
                if la.bias.tobytes() != lb.bias.tobytes():
                    return False
        return True
