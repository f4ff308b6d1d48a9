"""Adam optimizer and Polyak target-network averaging for Network objects.

All updates are in place and operate purely on float64 arrays so that a
given (network, gradient, state) triple always produces bit-identical
parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import GradientBuffer, Network


class NonFiniteGradientError(RuntimeError):
    """Raised when an update is attempted with NaN or infinite gradients."""


@dataclass
class AdamState:
    """First/second moment estimates plus hyperparameters for one network."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: GradientBuffer = field(default=None)  # type: ignore[assignment]
    v: GradientBuffer = field(default=None)  # type: ignore[assignment]


def adam_init(net: Network, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    if lr <= 0.0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    return AdamState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        m=GradientBuffer.zeros_for(net),
        v=GradientBuffer.zeros_for(net),
    )


def adam_step(net: Network, grads: GradientBuffer, state: AdamState) -> None:
    """Apply one Adam update to `net` in place, descending along `grads`."""
    if not grads.all_finite():
        raise NonFiniteGradientError(
            "refusing to apply a non-finite gradient (NaN or inf present); "
            "training has diverged"
        )
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for params, g, m, v in zip(
        _param_arrays(net), _buffer_arrays(grads),
        _buffer_arrays(state.m), _buffer_arrays(state.v),
    ):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        params -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def polyak_update(target: Network, online: Network, tau: float) -> None:
    """Move `target` toward `online`: p_t <- tau * p_o + (1 - tau) * p_t."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    if target.architecture() != online.architecture():
        raise ValueError(
            f"target architecture {target.architecture()} does not match "
            f"online architecture {online.architecture()}"
        )
    for p_t, p_o in zip(_param_arrays(target), _param_arrays(online)):
        p_t *= 1.0 - tau
        p_t += tau * p_o


def _param_arrays(net: Network):
    for layer in net.layers:
        yield layer.weights
        yield layer.bias


def _buffer_arrays(buf: GradientBuffer):
    for w, b in zip(buf.weights, buf.biases):
        yield w
        yield b
