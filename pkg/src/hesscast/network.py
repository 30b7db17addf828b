"""Fully-connected forecaster: architecture, weights, forward pass, scaling.

Networks are bias-free stacks of weight matrices.  Hidden layers apply the
configured activation; the final layer is linear so the regression output
is unbounded.  Network values are immutable: training and rescaling return
new instances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ACTIVATIONS",
    "Architecture",
    "Network",
    "alpha_scale",
    "flatten_weights",
    "forward",
    "forward_batch",
    "init_network",
    "load_network",
    "replace_weights",
    "save_network",
    "unflatten_weights",
]


def _act_tanh(z):
    return np.tanh(z)


def _dact_tanh(z, a):
    return 1.0 - a * a


def _act_relu(z):
    return np.maximum(z, 0.0)


def _dact_relu(z, a):
    return (z > 0.0).astype(np.float64)


def _act_linear(z):
    return z


def _dact_linear(z, a):
    return np.ones_like(z)


ACTIVATIONS = {
    "tanh": (_act_tanh, _dact_tanh),
    "relu": (_act_relu, _dact_relu),
    "linear": (_act_linear, _dact_linear),
}


@dataclass(frozen=True)
class Architecture:
    """Layer sizes and activation of a single-output dense network."""

    input_width: int
    hidden_widths: tuple[int, ...] = ()
    activation: str = "tanh"

    output_width = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_width < 1:
            raise ValueError(f"input width must be >= 1, got {self.input_width}")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError(f"hidden widths must all be >= 1, got {self.hidden_widths}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"unknown activation '{self.activation}', expected one of {sorted(ACTIVATIONS)}"
            )

    @property
    def layer_widths(self) -> tuple[int, ...]:
        """(n0, n1, ..., nL) including input and the width-1 output."""
        return (self.input_width, *self.hidden_widths, self.output_width)

    @property
    def n_layers(self) -> int:
        """Number of weight layers L."""
        return len(self.hidden_widths) + 1

    @property
    def param_count(self) -> int:
        widths = self.layer_widths
        return sum(widths[l] * widths[l - 1] for l in range(1, len(widths)))

    def weight_shapes(self) -> list[tuple[int, int]]:
        widths = self.layer_widths
        return [(widths[l], widths[l - 1]) for l in range(1, len(widths))]


@dataclass(frozen=True, eq=False)
class Network:
    """An architecture plus one weight matrix per layer (no biases)."""

    architecture: Architecture
    weights: tuple[np.ndarray, ...]

    def __post_init__(self):
        shapes = self.architecture.weight_shapes()
        if len(self.weights) != len(shapes):
            raise ValueError(f"expected {len(shapes)} weight matrices, got {len(self.weights)}")
        frozen = []
        for W, shape in zip(self.weights, shapes):
            W = np.asarray(W, dtype=np.float64)
            if W.shape != shape:
                raise ValueError(f"weight matrix shape {W.shape} does not match {shape}")
            if not np.all(np.isfinite(W)):
                raise ValueError("weights contain non-finite values")
            W = W.copy()
            W.setflags(write=False)
            frozen.append(W)
        object.__setattr__(self, "weights", tuple(frozen))

    @property
    def param_count(self) -> int:
        return self.architecture.param_count


def init_network(architecture: Architecture, seed: int) -> Network:
    """Draw every weight i.i.d. N(0, 1/width), deterministic per seed.

    ``width`` is the hidden-layer width the matrix is attached to: fan-out
    for matrices producing a hidden layer, fan-in for the output matrix.
    For uniform hidden widths every matrix gets variance 1/N_width; the
    degenerate no-hidden network falls back to 1/fan_in.
    """
    rng = np.random.default_rng(seed)
    shapes = architecture.weight_shapes()
    weights = []
    for l, (fan_out, fan_in) in enumerate(shapes):
        width = fan_out if l < len(shapes) - 1 else fan_in
        weights.append(rng.normal(0.0, 1.0 / np.sqrt(width), size=(fan_out, fan_in)))
    return Network(architecture, tuple(weights))


def replace_weights(network: Network, weights) -> Network:
    """New network with the same architecture and the given weights."""
    return Network(network.architecture, tuple(weights))


# ── Forward evaluation ───────────────────────────────────────────────────────


def _forward_batch_raw(weights, activation: str, X: np.ndarray) -> np.ndarray:
    """Outputs for a (N, n0) batch given raw weight matrices.  Hot path."""
    act, _ = ACTIVATIONS[activation]
    A = X.T
    for W in weights[:-1]:
        A = act(W @ A)
    return (weights[-1] @ A).ravel()


def forward_batch(network: Network, X) -> np.ndarray:
    """Evaluate the network on every row of ``X``; returns shape (N,)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    n0 = network.architecture.input_width
    if X.shape[1] != n0:
        raise ValueError(f"expected inputs of width {n0}, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs contain non-finite values")
    return _forward_batch_raw(network.weights, network.architecture.activation, X)


def forward(network: Network, x) -> float:
    """Scalar output for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D input vector, got shape {x.shape}")
    return float(forward_batch(network, x[None, :])[0])


# ── ReLU layer-pair rescaling ────────────────────────────────────────────────


def alpha_scale(network: Network, alpha: float, layer: int = 0) -> Network:
    """Scale W^(layer) by alpha and W^(layer+1) by 1/alpha.

    Leaves the output function unchanged for ReLU networks (positive
    homogeneity); rejected for other activations.  ``layer`` is the 0-based
    index of the first matrix of the pair.
    """
    if network.architecture.activation != "relu":
        raise ValueError(
            "alpha scaling preserves the output only for relu activation, "
            f"got '{network.architecture.activation}'"
        )
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    n_layers = network.architecture.n_layers
    if not 0 <= layer < n_layers - 1:
        raise ValueError(f"layer pair ({layer}, {layer + 1}) out of range for {n_layers} layers")
    weights = list(network.weights)
    weights[layer] = alpha * weights[layer]
    weights[layer + 1] = weights[layer + 1] / alpha
    return replace_weights(network, weights)


# ── Weight vectorization ─────────────────────────────────────────────────────
# Order: layer-major, row-major within a layer.  Hessian/gradient indices
# follow this order everywhere.


def flatten_weights(weights) -> np.ndarray:
    return np.concatenate([np.asarray(W).ravel(order="C") for W in weights])


def unflatten_weights(architecture: Architecture, vec: np.ndarray) -> list[np.ndarray]:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (architecture.param_count,):
        raise ValueError(f"expected vector of length {architecture.param_count}, got {vec.shape}")
    out = []
    offset = 0
    for shape in architecture.weight_shapes():
        size = shape[0] * shape[1]
        out.append(vec[offset : offset + size].reshape(shape))
        offset += size
    return out


# ── Serialization ────────────────────────────────────────────────────────────


def save_network(network: Network, path) -> None:
    """Write a JSON document that round-trips bit-exactly at full precision."""
    doc = {
        "input_width": network.architecture.input_width,
        "hidden_widths": list(network.architecture.hidden_widths),
        "activation": network.architecture.activation,
        "weights": [W.tolist() for W in network.weights],
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_network(path) -> Network:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    arch = Architecture(
        input_width=int(doc["input_width"]),
        hidden_widths=tuple(doc["hidden_widths"]),
        activation=str(doc["activation"]),
    )
    return Network(arch, tuple(np.asarray(W, dtype=np.float64) for W in doc["weights"]))
