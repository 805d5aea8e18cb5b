"""Pure-Python versions of the routines in ``_kernels.pyx``.

Signatures and semantics match the compiled module; results agree to
rounding (summation order differs).
"""

from __future__ import annotations

import math

import numpy as np

from .ann.activations import KERNEL_CODES, activate, backprop

_KIND_BY_CODE = {code: kind for kind, code in KERNEL_CODES.items()}


def _layer_views(params, sizes):
    views = []
    off = 0
    for nin, nout in zip(sizes[:-1], sizes[1:]):
        w = params[off : off + nin * nout].reshape(nout, nin)
        off += nin * nout
        b = params[off : off + nout]
        off += nout
        views.append((w, b))
    return views


def train_epoch(params, sizes, X, D, order, alpha, hidden_code, output_code):
    sizes = [int(s) for s in sizes]
    layers = _layer_views(params, sizes)
    hidden = _KIND_BY_CODE[int(hidden_code)]
    output = _KIND_BY_CODE[int(output_code)]
    last = len(layers) - 1
    sse = 0.0
    for pos, n in enumerate(order):
        acts = [X[n]]
        pres = []
        for l, (w, b) in enumerate(layers):
            v = w @ acts[-1] + b
            pres.append(v)
            acts.append(activate(output if l == last else hidden, v))
        e = D[n] - acts[-1]
        if not np.all(np.isfinite(e)):
            return pos, sse
        sse += float(0.5 * np.dot(e, e))
        deltas = [None] * len(layers)
        deltas[last] = backprop(output, pres[last], acts[-1], e)
        for l in range(last - 1, -1, -1):
            upstream = layers[l + 1][0].T @ deltas[l + 1]
            deltas[l] = backprop(hidden, pres[l], acts[l + 1], upstream)
        for l, (w, b) in enumerate(layers):
            w += alpha * np.outer(deltas[l], acts[l])
            b += alpha * deltas[l]
    return -1, sse


def _panel_current(v, isc, voc, c1, c2):
    i = isc * (1.0 - c1 * math.expm1(v / (c2 * voc)))
    return i if i > 0 else 0.0


def load_line_voltage(isc, voc, c1, c2, r_in, tol):
    if isc <= 0:
        return 0.0
    lo, hi = 0.0, voc
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _panel_current(mid, isc, voc, c1, c2) - mid / r_in > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cuk_run(state, l1, l2, c1, c2, duty, v_in, r_load, dt, out, limit):
    def deriv(s):
        i1, i2, v1, v2 = s
        return (
            (v_in - (1.0 - duty) * v1) / l1,
            (duty * v1 - v2) / l2,
            ((1.0 - duty) * i1 - duty * i2) / c1,
            (i2 - v2 / r_load) / c2,
        )

    s = tuple(float(x) for x in state)
    out[0] = s
    h = 0.5 * dt
    for n in range(1, out.shape[0]):
        k1 = deriv(s)
        k2 = deriv(tuple(a + h * b for a, b in zip(s, k1)))
        k3 = deriv(tuple(a + h * b for a, b in zip(s, k2)))
        k4 = deriv(tuple(a + dt * b for a, b in zip(s, k3)))
        s = tuple(
            a + dt / 6.0 * (p + 2.0 * q + 2.0 * r + t) for a, p, q, r, t in zip(s, k1, k2, k3, k4)
        )
        out[n] = s
        if not all(abs(x) <= limit for x in s):
            return n
    return -1
