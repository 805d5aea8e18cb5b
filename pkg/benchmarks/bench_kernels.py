"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--samples 5000]

Prints best-of-N wall time per kernel and the speedup. Works without the
extension (only the fallback column is filled in then).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pvmppt import _backend, _fallback
from pvmppt import cuk_converter as ck
from pvmppt import pv_panel as pv


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(samples):
    rng = np.random.default_rng(0)
    sizes = np.array([3, 6, 3, 1], dtype=np.int64)
    params0 = rng.uniform(-0.5, 0.5, 49)
    X = rng.uniform(-1, 1, (samples, 3))
    D = rng.uniform(-1, 1, (samples, 1))
    order = rng.permutation(samples).astype(np.int64)

    spec = pv.YL150P_17B
    envs = [pv.EnvCondition(g, t) for g in np.linspace(100, 1000, 20) for t in (10.0, 35.0, 60.0)]
    loads = [(*pv.corrected_sc_oc(spec, e), spec.c1, spec.c2, ck.input_resistance(0.6, 10.0), 1e-3) for e in envs]

    d = ck.BENCH_DESIGN
    steps = 20_000
    cuk_args = (d.l1, d.l2, d.c1, d.c2, 0.6768, 18.5, 10.0, ck.default_dt(d))

    def train(mod):
        return lambda: mod.train_epoch(params0.copy(), sizes, X, D, order, 0.01, 0, 0)

    def load_line(mod):
        return lambda: [mod.load_line_voltage(*a) for a in loads * 10]

    def cuk(mod):
        return lambda: mod.cuk_run(np.zeros(4), *cuk_args, np.empty((steps + 1, 4)), 1e6)

    return [
        (f"train_epoch ({samples} samples, 3-6-3-1 tanh)", train),
        (f"load_line_voltage ({len(loads) * 10} solves)", load_line),
        (f"cuk_run ({steps} RK4 steps)", cuk),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--samples", type=int, default=5000)
    args = ap.parse_args(argv)

    compiled = _backend.compiled
    print(f"selected backend: {_backend.NAME}")
    print(f"{'kernel':48s} {'compiled s':>11s} {'python s':>11s} {'speedup':>8s}")
    for name, make in cases(args.samples):
        t_py = best_of(make(_fallback), args.repeat)
        if compiled is None:
            print(f"{name:48s} {'-':>11s} {t_py:11.4f} {'-':>8s}")
            continue
        t_c = best_of(make(compiled), args.repeat)
        print(f"{name:48s} {t_c:11.4f} {t_py:11.4f} {t_py / t_c:7.0f}x")


if __name__ == "__main__":
    main()
