# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Same signatures and semantics as ``_fallback``."""

from libc.math cimport tanh, exp, expm1, log1p, erf, fabs, sqrt, isfinite
from libc.stdlib cimport malloc, free

cdef double SELU_LAMBDA = 1.0507009873554805
cdef double SELU_ALPHA = 1.6732632423543772
cdef double INV_SQRT2 = 0.7071067811865476
cdef double INV_SQRT_2PI = 0.3989422804014327


cdef inline double _sigmoid(double v) nogil:
    cdef double z
    if v >= 0:
        return 1.0 / (1.0 + exp(-v))
    z = exp(v)
    return z / (1.0 + z)


cdef inline double _act(int code, double v) nogil:
    cdef double s
    if code == 0:
        return tanh(v)
    elif code == 1:
        return v
    elif code == 2:
        return v if v > 0 else 0.0
    elif code == 3:
        return 0.5 * v * (1.0 + erf(v * INV_SQRT2))
    elif code == 4:
        return SELU_LAMBDA * v if v > 0 else SELU_LAMBDA * SELU_ALPHA * expm1(v)
    elif code == 5:
        return _sigmoid(v)
    elif code == 6:
        return (v if v > 0 else 0.0) + log1p(exp(-fabs(v)))
    elif code == 7:
        return v / (1.0 + fabs(v))
    else:
        return v * _sigmoid(v)


cdef inline double _dact(int code, double v) nogil:
    cdef double s, t, a
    if code == 0:
        t = tanh(v)
        return 1.0 - t * t
    elif code == 1:
        return 1.0
    elif code == 2:
        return 1.0 if v > 0 else 0.0
    elif code == 3:
        return 0.5 * (1.0 + erf(v * INV_SQRT2)) + v * INV_SQRT_2PI * exp(-0.5 * v * v)
    elif code == 4:
        return SELU_LAMBDA if v > 0 else SELU_LAMBDA * SELU_ALPHA * exp(v)
    elif code == 5:
        s = _sigmoid(v)
        return s * (1.0 - s)
    elif code == 6:
        return _sigmoid(v)
    elif code == 7:
        a = 1.0 + fabs(v)
        return 1.0 / (a * a)
    else:
        s = _sigmoid(v)
        return s + v * s * (1.0 - s)


def train_epoch(double[::1] params, long[::1] sizes, double[:, ::1] X, double[:, ::1] D,
                long[::1] order, double alpha, int hidden_code, int output_code):
    """One pass of online delta-rule updates over ``order``.

    ``params`` holds, per layer, the row-major weight matrix followed by the
    bias vector; it is updated in place. Returns ``(bad, sse)`` where ``bad``
    is the position in ``order`` whose error went non-finite (-1 if none) and
    ``sse`` is the sum of half squared errors seen before each update.
    """
    cdef Py_ssize_t n_layers = sizes.shape[0] - 1
    cdef Py_ssize_t total = 0, l, k, j, n, pos, nin, nout, woff, aoff, aprev
    cdef Py_ssize_t n_out = sizes[n_layers]
    for l in range(n_layers + 1):
        total += sizes[l]
    cdef double *act = <double *> malloc(total * sizeof(double))
    cdef double *pre = <double *> malloc(total * sizeof(double))
    cdef double *delta = <double *> malloc(total * sizeof(double))
    cdef Py_ssize_t *aoffs = <Py_ssize_t *> malloc((n_layers + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *woffs = <Py_ssize_t *> malloc((n_layers + 1) * sizeof(Py_ssize_t))
    cdef double acc, e, sse = 0.0
    cdef int code
    cdef long bad = -1

    # aoffs[l]: start of layer l in act/pre/delta; woffs[l]: start of layer l's block in params
    aoffs[0] = 0
    woffs[0] = 0
    woffs[1] = 0
    for l in range(1, n_layers + 1):
        aoffs[l] = aoffs[l - 1] + sizes[l - 1]
    for l in range(2, n_layers + 1):
        woffs[l] = woffs[l - 1] + sizes[l - 2] * sizes[l - 1] + sizes[l - 1]

    try:
        with nogil:
            for pos in range(order.shape[0]):
                n = order[pos]
                for j in range(sizes[0]):
                    act[j] = X[n, j]
                # forward
                for l in range(1, n_layers + 1):
                    nin = sizes[l - 1]
                    nout = sizes[l]
                    woff = woffs[l]
                    aoff = aoffs[l]
                    aprev = aoffs[l - 1]
                    code = output_code if l == n_layers else hidden_code
                    for k in range(nout):
                        acc = 0.0
                        for j in range(nin):
                            acc = acc + params[woff + k * nin + j] * act[aprev + j]
                        acc = acc + params[woff + nout * nin + k]
                        pre[aoff + k] = acc
                        act[aoff + k] = _act(code, acc)
                # output error and local gradients
                aoff = aoffs[n_layers]
                for k in range(n_out):
                    e = D[n, k] - act[aoff + k]
                    if not isfinite(e):
                        bad = pos
                        break
                    sse = sse + 0.5 * e * e
                    delta[aoff + k] = e * _dact(output_code, pre[aoff + k])
                if bad >= 0:
                    break
                for l in range(n_layers - 1, 0, -1):
                    nin = sizes[l]
                    nout = sizes[l + 1]
                    woff = woffs[l + 1]
                    for j in range(nin):
                        acc = 0.0
                        for k in range(nout):
                            acc = acc + delta[aoffs[l + 1] + k] * params[woff + k * nin + j]
                        delta[aoffs[l] + j] = _dact(hidden_code, pre[aoffs[l] + j]) * acc
                # delta rule
                for l in range(1, n_layers + 1):
                    nin = sizes[l - 1]
                    nout = sizes[l]
                    woff = woffs[l]
                    aoff = aoffs[l]
                    aprev = aoffs[l - 1]
                    for k in range(nout):
                        for j in range(nin):
                            params[woff + k * nin + j] += alpha * delta[aoff + k] * act[aprev + j]
                        params[woff + nout * nin + k] += alpha * delta[aoff + k]
    finally:
        free(act)
        free(pre)
        free(delta)
        free(aoffs)
        free(woffs)
    return bad, sse


cdef inline double _panel_current(double v, double isc, double voc, double c1, double c2) nogil:
    cdef double i = isc * (1.0 - c1 * expm1(v / (c2 * voc)))
    return i if i > 0 else 0.0


def load_line_voltage(double isc, double voc, double c1, double c2, double r_in, double tol):
    """Bisection for the voltage where the panel curve meets ``v / r_in``."""
    cdef double lo = 0.0, hi = voc, mid
    if isc <= 0:
        return 0.0
    with nogil:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if _panel_current(mid, isc, voc, c1, c2) - mid / r_in > 0:
                lo = mid
            else:
                hi = mid
    return 0.5 * (lo + hi)


cdef inline void _cuk_deriv(double *s, double *out, double l1, double l2, double c1, double c2,
                            double d, double v_in, double r) nogil:
    out[0] = (v_in - (1.0 - d) * s[2]) / l1
    out[1] = (d * s[2] - s[3]) / l2
    out[2] = ((1.0 - d) * s[0] - d * s[1]) / c1
    out[3] = (s[1] - s[3] / r) / c2


def cuk_run(double[::1] state, double l1, double l2, double c1, double c2, double duty,
            double v_in, double r_load, double dt, double[:, ::1] out, double limit):
    """RK4 steps of the averaged model; ``out[0]`` is the initial state.

    Returns the index of the first row exceeding ``limit`` in magnitude, or -1.
    """
    cdef double s[4]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double tmp[4]
    cdef Py_ssize_t n, m, steps = out.shape[0] - 1
    cdef long bad = -1
    for m in range(4):
        s[m] = state[m]
        out[0, m] = s[m]
    with nogil:
        for n in range(1, steps + 1):
            _cuk_deriv(s, k1, l1, l2, c1, c2, duty, v_in, r_load)
            for m in range(4):
                tmp[m] = s[m] + 0.5 * dt * k1[m]
            _cuk_deriv(tmp, k2, l1, l2, c1, c2, duty, v_in, r_load)
            for m in range(4):
                tmp[m] = s[m] + 0.5 * dt * k2[m]
            _cuk_deriv(tmp, k3, l1, l2, c1, c2, duty, v_in, r_load)
            for m in range(4):
                tmp[m] = s[m] + dt * k3[m]
            _cuk_deriv(tmp, k4, l1, l2, c1, c2, duty, v_in, r_load)
            for m in range(4):
                s[m] = s[m] + dt / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m])
                out[n, m] = s[m]
                if not (fabs(s[m]) <= limit):
                    bad = n
            if bad >= 0:
                break
    return bad
