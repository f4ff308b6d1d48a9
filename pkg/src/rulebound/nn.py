"""Dense feed-forward networks with exact analytic reverse-mode gradients.

Everything here is plain float64 numpy. Networks are chains of affine
layers followed by an elementwise activation ("relu", "tanh" or "linear").
The backward pass is specialized to this chain and returns derivatives of
a scalar functional <output, cotangent> with respect to every parameter
and to the input, so callers can compose chains (e.g. differentiate a
critic's output with respect to the action produced by an actor).

A central finite-difference estimator is included as the independent
oracle used by the verification suite and the `gradcheck` command.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("linear", "relu", "tanh")


@dataclass
class Layer:
    """One affine layer: y = act(W x + b), weights shaped (out_dim, in_dim)."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self) -> None:
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("weights must be 2-D and bias 1-D")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ValueError(
                f"bias length {self.bias.shape[0]} does not match "
                f"weight rows {self.weights.shape[0]}"
            )

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class Network:
    """A chain of layers with matching consecutive dimensions."""

    layers: list[Layer]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise ValueError(
                    f"layer output width {prev.out_dim} does not chain "
                    f"with next input width {nxt.in_dim}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def architecture(self) -> list[tuple[int, int, str]]:
        return [(l.in_dim, l.out_dim, l.activation) for l in self.layers]

    def num_parameters(self) -> int:
        return sum(l.weights.size + l.bias.size for l in self.layers)

    def clone(self) -> "Network":
        return Network(
            [Layer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers]
        )

    def all_finite(self) -> bool:
        return all(
            np.all(np.isfinite(l.weights)) and np.all(np.isfinite(l.bias))
            for l in self.layers
        )


@dataclass
class GradientBuffer:
    """Per-parameter accumulators, shape-congruent with a Network."""

    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def zeros_for(cls, net: Network) -> "GradientBuffer":
        return cls(
            weights=[np.zeros_like(l.weights) for l in net.layers],
            biases=[np.zeros_like(l.bias) for l in net.layers],
        )

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(
            np.all(np.isfinite(b)) for b in self.biases
        )

    def max_abs(self) -> float:
        vals = [np.max(np.abs(w), initial=0.0) for w in self.weights]
        vals += [np.max(np.abs(b), initial=0.0) for b in self.biases]
        return float(max(vals))

    def add_scaled(self, other: "GradientBuffer", scale: float) -> None:
        for w, ow in zip(self.weights, other.weights):
            w += scale * ow
        for b, ob in zip(self.biases, other.biases):
            b += scale * ob


def mlp(
    in_dim: int,
    hidden: tuple[int, ...] | list[int],
    out_dim: int,
    output_activation: str = "linear",
    hidden_activation: str = "relu",
    rng: np.random.Generator | None = None,
) -> Network:
    """Build an MLP with uniform +-1/sqrt(fan_in) initialization."""
    if rng is None:
        rng = np.random.default_rng()
    dims = [in_dim, *hidden, out_dim]
    acts = [hidden_activation] * len(hidden) + [output_activation]
    layers = []
    for d_in, d_out, act in zip(dims[:-1], dims[1:], acts):
        bound = 1.0 / np.sqrt(d_in)
        w = rng.uniform(-bound, bound, size=(d_out, d_in))
        b = rng.uniform(-bound, bound, size=d_out)
        layers.append(Layer(w, b, act))
    return Network(layers)


def _apply_activation(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "tanh":
        return np.tanh(z)
    return z


def forward(net: Network, x: np.ndarray) -> np.ndarray:
    """Evaluate the layer chain. Accepts (in_dim,) or (batch, in_dim); pure."""
    y, _ = forward_cached(net, x)
    return y


def forward_cached(net: Network, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass that also returns the per-layer activations needed by backward().

    The cache holds the input to the first layer followed by each layer's
    post-activation output (batch-shaped).
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.ndim != 2 or h.shape[1] != net.in_dim:
        raise ValueError(
            f"input of shape {x.shape} does not match network input width {net.in_dim}"
        )
    cache = [h]
    for layer in net.layers:
        z = h @ layer.weights.T + layer.bias
        h = _apply_activation(z, layer.activation)
        cache.append(h)
    return (h[0] if single else h), cache


def backward(
    net: Network, cache: list[np.ndarray], output_cotangent: np.ndarray
) -> tuple[GradientBuffer, np.ndarray]:
    """Exact reverse-mode derivatives of <output, cotangent>.

    Returns the gradient with respect to every parameter and the cotangent
    of the network input (summed over the batch for parameters, per-sample
    for the input).
    """
    gy = np.asarray(output_cotangent, dtype=np.float64)
    single = gy.ndim == 1
    g = gy[None, :] if single else gy
    if g.shape != cache[-1].shape:
        raise ValueError(
            f"cotangent shape {gy.shape} does not match output shape {cache[-1].shape}"
        )
    grads = GradientBuffer(
        weights=[None] * len(net.layers), biases=[None] * len(net.layers)
    )
    for idx in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[idx]
        out = cache[idx + 1]
        if layer.activation == "relu":
            g = g * (out > 0.0)
        elif layer.activation == "tanh":
            g = g * (1.0 - out * out)
        x_in = cache[idx]
        grads.weights[idx] = g.T @ x_in
        grads.biases[idx] = g.sum(axis=0)
        g = g @ layer.weights
    return grads, (g[0] if single else g)


def input_gradient(net: Network, x: np.ndarray, output_cotangent: np.ndarray) -> np.ndarray:
    """Cotangent of the input alone (convenience over forward_cached + backward)."""
    _, cache = forward_cached(net, x)
    _, gx = backward(net, cache, output_cotangent)
    return gx


def finite_difference_gradient(net: Network, loss_fn, step: float = 1e-6) -> GradientBuffer:
    """Central-difference estimate of d loss_fn(net) / d params.

    `loss_fn` takes the network and returns a scalar. The network is
    restored exactly after probing, so this is safe to run on live nets.
    Used as the independent oracle against backward().
    """
    grads = GradientBuffer.zeros_for(net)
    for idx, layer in enumerate(net.layers):
        for arr, out in ((layer.weights, grads.weights[idx]), (layer.bias, grads.biases[idx])):
            flat = arr.ravel()
            gflat = out.ravel()
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + step
                f_plus = loss_fn(net)
                flat[k] = orig - step
                f_minus = loss_fn(net)
                flat[k] = orig
                gflat[k] = (f_plus - f_minus) / (2.0 * step)
    return grads
