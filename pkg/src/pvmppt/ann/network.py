"""Multilayer perceptron with per-sample delta-rule updates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activations import Activation, activate, backprop


class ShapeError(ValueError):
    pass


class DivergenceError(FloatingPointError):
    def __init__(self, message, sample_index=None, epoch=None):
        super().__init__(message)
        self.sample_index = sample_index
        self.epoch = epoch


def parameter_count(layer_sizes) -> int:
    return sum(a * b + b for a, b in zip(layer_sizes[:-1], layer_sizes[1:]))


@dataclass
class MlpNetwork:
    """Fully connected network stored as one flat parameter vector.

    ``weights[l]`` has shape ``(layer_sizes[l+1], layer_sizes[l])`` and, like
    ``biases[l]``, is a view into ``params``; in-place updates of either
    are visible through both.
    """

    layer_sizes: list[int]
    params: np.ndarray
    hidden_activation: Activation = Activation.TANH
    output_activation: Activation = Activation.TANH
    weights: list[np.ndarray] = field(init=False, repr=False)
    biases: list[np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        self.layer_sizes = [int(s) for s in self.layer_sizes]
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise ShapeError(f"invalid layer sizes {self.layer_sizes}")
        self.params = np.ascontiguousarray(self.params, dtype=float)
        if self.params.shape != (parameter_count(self.layer_sizes),):
            raise ShapeError(
                f"expected {parameter_count(self.layer_sizes)} parameters, got {self.params.shape}"
            )
        self.hidden_activation = Activation(self.hidden_activation)
        self.output_activation = Activation(self.output_activation)
        self.weights, self.biases = [], []
        off = 0
        for nin, nout in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            self.weights.append(self.params[off : off + nin * nout].reshape(nout, nin))
            off += nin * nout
            self.biases.append(self.params[off : off + nout])
            off += nout

    @classmethod
    def initialize(cls, layer_sizes=(3, 6, 3, 1), hidden="tanh", output="tanh", seed=0):
        """Uniform init in +-1/sqrt(fan_in) for weights and biases."""
        rng = np.random.default_rng(seed)
        chunks = []
        for nin, nout in zip(layer_sizes[:-1], layer_sizes[1:]):
            bound = 1.0 / np.sqrt(nin)
            chunks.append(rng.uniform(-bound, bound, nin * nout))
            chunks.append(rng.uniform(-bound, bound, nout))
        return cls(list(layer_sizes), np.concatenate(chunks), hidden, output)

    @classmethod
    def zeros(cls, layer_sizes=(3, 6, 3, 1), hidden="tanh", output="tanh"):
        return cls(list(layer_sizes), np.zeros(parameter_count(layer_sizes)), hidden, output)

    def copy(self) -> "MlpNetwork":
        return MlpNetwork(
            list(self.layer_sizes), self.params.copy(), self.hidden_activation, self.output_activation
        )

    @property
    def n_params(self) -> int:
        return self.params.size

    def activation_of(self, layer: int) -> Activation:
        return self.output_activation if layer == len(self.weights) - 1 else self.hidden_activation

    def predict(self, X) -> np.ndarray:
        """Batched forward pass; rows of ``X`` are samples."""
        a = np.atleast_2d(np.asarray(X, dtype=float))
        if a.shape[1] != self.layer_sizes[0]:
            raise ShapeError(f"input width {a.shape[1]} != {self.layer_sizes[0]}")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = activate(self.activation_of(l), a @ w.T + b)
        return a


@dataclass
class LayerTrace:
    u: np.ndarray  # weighted input sum
    v: np.ndarray  # u plus bias
    y: np.ndarray  # activation output


def forward(net: MlpNetwork, x):
    """Single-sample forward pass returning the output and per-layer traces."""
    y = np.asarray(x, dtype=float)
    if y.shape != (net.layer_sizes[0],):
        raise ShapeError(f"input shape {y.shape} != ({net.layer_sizes[0]},)")
    trace = []
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        u = w @ y
        v = u + b
        y = activate(net.activation_of(l), v)
        trace.append(LayerTrace(u, v, y))
    return y, trace


def loss(e):
    """Instantaneous error energy, half the squared error."""
    return 0.5 * np.square(e)


def local_gradients(net: MlpNetwork, x, d, trace):
    """Error and per-layer local gradients for one sample (weights untouched)."""
    e = np.atleast_1d(np.asarray(d, dtype=float)) - trace[-1].y
    last = len(trace) - 1
    deltas = [None] * len(trace)
    deltas[last] = backprop(net.output_activation, trace[last].v, trace[last].y, e)
    for l in range(last - 1, -1, -1):
        upstream = net.weights[l + 1].T @ deltas[l + 1]
        deltas[l] = backprop(net.hidden_activation, trace[l].v, trace[l].y, upstream)
    return e, deltas


def gradient(net: MlpNetwork, x, d) -> np.ndarray:
    """d(loss)/d(params) as a flat vector, same layout as ``net.params``."""
    x = np.asarray(x, dtype=float)
    _, trace = forward(net, x)
    _, deltas = local_gradients(net, x, d, trace)
    inputs = [x] + [t.y for t in trace[:-1]]
    parts = []
    for delta, a in zip(deltas, inputs):
        parts.append(-np.outer(delta, a).ravel())
        parts.append(-delta)
    return np.concatenate(parts)


def backward_update(net: MlpNetwork, x, d, trace, alpha: float, sample_index=None):
    """Apply one online delta-rule step in place; returns the output error."""
    x = np.asarray(x, dtype=float)
    e, deltas = local_gradients(net, x, d, trace)
    if not all(np.all(np.isfinite(dl)) for dl in deltas) or not np.all(np.isfinite(e)):
        raise DivergenceError(f"non-finite gradient at sample {sample_index}", sample_index)
    inputs = [x] + [t.y for t in trace[:-1]]
    for l, (delta, a) in enumerate(zip(deltas, inputs)):
        net.weights[l] += alpha * np.outer(delta, a)
        net.biases[l] += alpha * delta
    return e
