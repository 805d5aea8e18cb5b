"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np

from pvmppt.ann.activations import KINKS, Activation
from pvmppt.ann.network import MlpNetwork, forward, gradient

H = 1e-5
KINK_MARGIN = 1e-3


def fd_gradient(net: MlpNetwork, x, d, h=H):
    """Central-difference gradient of 0.5 * sum(e^2) over the flat parameters."""
    base = net.params.copy()
    out = np.empty_like(base)
    for k in range(base.size):
        for sign in (1, -1):
            net.params[:] = base
            net.params[k] += sign * h
            y, _ = forward(net, x)
            val = 0.5 * np.sum((np.atleast_1d(d) - y) ** 2)
            out[k] = val if sign == 1 else (out[k] - val) / (2 * h)
    net.params[:] = base
    return out


def near_kink(net: MlpNetwork, x, margin=KINK_MARGIN):
    """True when any pre-activation sits within ``margin`` of a kink."""
    _, trace = forward(net, x)
    for layer, t in enumerate(trace):
        for kink in KINKS.get(net.activation_of(layer), ()):
            if np.any(np.abs(t.v - kink) < margin):
                return True
    return False


def gradient_check(kind, layer_sizes=(3, 6, 3, 1), output=None, n_nets=5, seed=0, rel=1e-5, floor=1e-9):
    """Worst relative mismatch between backprop and finite differences.

    Returns ``(worst_ratio, checked)`` where ``worst_ratio`` is
    ``|a - n| / (rel * max(|a|, |n|) + floor)``; the check passes when it is <= 1.
    """
    rng = np.random.default_rng(seed)
    kind = Activation(kind)
    output = kind if output is None else Activation(output)
    worst, checked = 0.0, 0
    while checked < n_nets:
        net = MlpNetwork.initialize(layer_sizes, kind, output, seed=int(rng.integers(1 << 31)))
        net.params[:] *= 1.5
        x = rng.uniform(-1, 1, layer_sizes[0])
        d = rng.uniform(-1, 1, layer_sizes[-1])
        if near_kink(net, x):
            continue
        a = gradient(net, x, d)
        n = fd_gradient(net, x, d)
        ratio = np.abs(a - n) / (rel * np.maximum(np.abs(a), np.abs(n)) + floor)
        worst = max(worst, float(ratio.max()))
        checked += 1
    return worst, checked


def scalar_221_update(w1, b1, w2, b2, x, d, alpha):
    """Delta rule on a 2-2-1 tanh network written out with Python floats."""
    v_h = [w1[j][0] * x[0] + w1[j][1] * x[1] + b1[j] for j in range(2)]
    y_h = [math.tanh(v) for v in v_h]
    v_o = w2[0] * y_h[0] + w2[1] * y_h[1] + b2
    y_o = math.tanh(v_o)
    e = d - y_o
    delta_o = e * (1 - y_o * y_o)
    delta_h = [(1 - y_h[j] ** 2) * delta_o * w2[j] for j in range(2)]
    new_w1 = [[w1[j][i] + alpha * delta_h[j] * x[i] for i in range(2)] for j in range(2)]
    new_b1 = [b1[j] + alpha * delta_h[j] for j in range(2)]
    new_w2 = [w2[j] + alpha * delta_o * y_h[j] for j in range(2)]
    new_b2 = b2 + alpha * delta_o
    return new_w1, new_b1, new_w2, new_b2, e
