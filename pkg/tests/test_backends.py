"""Compiled kernels and their pure-Python fallback must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from pvmppt import _backend, _fallback
from pvmppt import cuk_converter as ck
from pvmppt import pv_panel as pv
from pvmppt.ann.activations import Activation

compiled = _backend.compiled
needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")
KINDS = [k for k in Activation if k.elementwise]


def _epoch(mod, hidden, output, sizes=(3, 6, 3, 1), n=64, alpha=0.05, seed=0):
    rng = np.random.default_rng(seed)
    n_params = sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))
    params = rng.uniform(-0.5, 0.5, n_params)
    X = rng.uniform(-1, 1, (n, sizes[0]))
    D = rng.uniform(-1, 1, (n, sizes[-1]))
    order = rng.permutation(n).astype(np.int64)
    bad, sse = mod.train_epoch(params, np.asarray(sizes, dtype=np.int64), X, D, order, alpha,
                               hidden.code, output.code)
    return params, bad, sse


@needs_ext
@pytest.mark.parametrize("hidden", KINDS, ids=lambda k: k.value)
def test_train_epoch_agrees(hidden):
    for output in (Activation.TANH, Activation.LINEAR, hidden):
        pc, bc, sc = _epoch(compiled, hidden, output)
        pf, bf, sf = _epoch(_fallback, hidden, output)
        assert bc == bf == -1
        np.testing.assert_allclose(pc, pf, rtol=1e-10, atol=1e-12)
        assert sc == pytest.approx(sf, rel=1e-10)


@needs_ext
def test_train_epoch_other_shapes():
    for sizes in [(2, 1), (4, 5, 2), (3, 8, 8, 4, 1)]:
        pc, _, _ = _epoch(compiled, Activation.TANH, Activation.TANH, sizes)
        pf, _, _ = _epoch(_fallback, Activation.TANH, Activation.TANH, sizes)
        np.testing.assert_allclose(pc, pf, rtol=1e-10, atol=1e-12)


@needs_ext
def test_train_epoch_reports_divergence():
    X = np.full((3, 1), 1e200)
    D = -X
    for mod in (compiled, _fallback):
        params = np.array([1.0, 0.0])
        with np.errstate(all="ignore"):
            bad, _ = mod.train_epoch(params, np.array([1, 1], dtype=np.int64), X, D,
                                     np.arange(3, dtype=np.int64), 1e200, 1, 1)
        assert bad >= 0


@needs_ext
@pytest.mark.parametrize("g,t,d,r", [(1000, 25, 0.6, 10), (150, 60, 0.3, 1), (800, 5, 0.9, 19), (400, 40, 0.05, 3)])
def test_load_line_agrees(g, t, d, r):
    env = pv.EnvCondition(g, t)
    isc, voc = pv.corrected_sc_oc(pv.YL150P_17B, env)
    args = (isc, voc, pv.YL150P_17B.c1, pv.YL150P_17B.c2, ck.input_resistance(d, r), 1e-9)
    assert compiled.load_line_voltage(*args) == pytest.approx(_fallback.load_line_voltage(*args), abs=1e-12)


@needs_ext
def test_cuk_run_agrees():
    design = ck.BENCH_DESIGN
    args = (design.l1, design.l2, design.c1, design.c2, 0.6768, 18.5, 10.0, ck.default_dt(design))
    a = np.empty((2001, 4))
    b = np.empty((2001, 4))
    assert compiled.cuk_run(np.zeros(4), *args, a, 1e6) == -1
    assert _fallback.cuk_run(np.zeros(4), *args, b, 1e6) == -1
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_ext
def test_cuk_run_divergence_index():
    design = ck.BENCH_DESIGN
    args = (design.l1, design.l2, design.c1, design.c2, 0.6768, 18.5, 10.0, 1e-4)
    a = np.empty((500, 4))
    b = np.empty((500, 4))
    with np.errstate(all="ignore"):
        assert compiled.cuk_run(np.zeros(4), *args, a, 1e6) == _fallback.cuk_run(np.zeros(4), *args, b, 1e6) > 0


def test_env_var_forces_fallback():
    code = "from pvmppt import _backend; print(_backend.NAME)"
    env = dict(os.environ, PVMPPT_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_selected_backend_is_consistent():
    assert _backend.kernels is (_backend.compiled or _fallback)
