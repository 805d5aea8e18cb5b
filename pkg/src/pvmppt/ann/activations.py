"""Activation functions and their derivatives.

All kinds except softmax act element-wise. Softmax normalizes a whole layer;
its derivative is exposed as a Jacobian-vector product.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from scipy.special import erf, expit

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772
_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class Activation(str, Enum):
    TANH = "tanh"
    LINEAR = "linear"
    RELU = "relu"
    GELU = "gelu"
    SELU = "selu"
    SIGMOID = "sigmoid"
    SOFTMAX = "softmax"
    SOFTPLUS = "softplus"
    SOFTSIGN = "softsign"
    SWISH = "swish"

    @property
    def code(self) -> int:
        return KERNEL_CODES[self]

    @property
    def elementwise(self) -> bool:
        return self is not Activation.SOFTMAX


# Integer tags shared with the compiled kernel. Softmax has no kernel code.
KERNEL_CODES = {
    Activation.TANH: 0,
    Activation.LINEAR: 1,
    Activation.RELU: 2,
    Activation.GELU: 3,
    Activation.SELU: 4,
    Activation.SIGMOID: 5,
    Activation.SOFTPLUS: 6,
    Activation.SOFTSIGN: 7,
    Activation.SWISH: 8,
    Activation.SOFTMAX: -1,
}

# Points where the derivative is discontinuous.
KINKS = {Activation.RELU: (0.0,), Activation.SELU: (0.0,)}


def activate(kind, v):
    kind = Activation(kind)
    v = np.asarray(v, dtype=float)
    if kind is Activation.TANH:
        return np.tanh(v)
    if kind is Activation.LINEAR:
        return v.copy()
    if kind is Activation.RELU:
        return np.maximum(v, 0.0)
    if kind is Activation.GELU:
        return 0.5 * v * (1.0 + erf(v / _SQRT2))
    if kind is Activation.SELU:
        return SELU_LAMBDA * np.where(v > 0, v, SELU_ALPHA * np.expm1(np.minimum(v, 0.0)))
    if kind is Activation.SIGMOID:
        return expit(v)
    if kind is Activation.SOFTPLUS:
        return np.logaddexp(0.0, v)
    if kind is Activation.SOFTSIGN:
        return v / (1.0 + np.abs(v))
    if kind is Activation.SWISH:
        return v * expit(v)
    if kind is Activation.SOFTMAX:
        z = np.exp(v - np.max(v, axis=-1, keepdims=True))
        return z / np.sum(z, axis=-1, keepdims=True)
    raise ValueError(kind)


def derivative(kind, v):
    """Element-wise dphi/dv. Not defined for softmax; use :func:`backprop`."""
    kind = Activation(kind)
    v = np.asarray(v, dtype=float)
    if kind is Activation.TANH:
        t = np.tanh(v)
        return 1.0 - t * t
    if kind is Activation.LINEAR:
        return np.ones_like(v)
    if kind is Activation.RELU:
        return (v > 0).astype(float)
    if kind is Activation.GELU:
        return 0.5 * (1.0 + erf(v / _SQRT2)) + v * _INV_SQRT_2PI * np.exp(-0.5 * v * v)
    if kind is Activation.SELU:
        return SELU_LAMBDA * np.where(v > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(v, 0.0)))
    if kind is Activation.SIGMOID:
        s = expit(v)
        return s * (1.0 - s)
    if kind is Activation.SOFTPLUS:
        return expit(v)
    if kind is Activation.SOFTSIGN:
        a = 1.0 + np.abs(v)
        return 1.0 / (a * a)
    if kind is Activation.SWISH:
        s = expit(v)
        return s + v * s * (1.0 - s)
    raise ValueError(f"{kind.value} has no element-wise derivative")


def backprop(kind, v, y, upstream):
    """Local gradient w.r.t. pre-activation ``v`` given dL/dy = ``upstream``."""
    kind = Activation(kind)
    if kind is Activation.SOFTMAX:
        # J = diag(y) - y y^T, symmetric
        return y * (upstream - np.dot(upstream, y))
    return derivative(kind, v) * upstream
