"""Time the compiled and numpy projected-gradient kernels on the same problems.

    python benchmarks/bench_pgm.py [--iters 500] [--repeat 3]
"""
import argparse
import time

import numpy as np

from faircee import _pgm_py
from faircee import estimators as est
from faircee.solvers import lipschitz_constant

try:
    from faircee import _pgm_core
except ImportError:
    _pgm_core = None


def problem(N, d, seed=0):
    rng = np.random.default_rng(seed)
    X = np.hstack([rng.standard_normal((N, d - 1)), np.ones((N, 1))])
    s = (rng.random(N) < 1 / (1 + np.exp(-X[:, 0]))).astype(float)
    y = 2.0 * (rng.random(N) < 1 / (1 + np.exp(-(X @ rng.standard_normal(d))))) - 1.0
    z = np.clip(1 / (1 + np.exp(-X[:, 0])), 1e-6, 1 - 1e-6)
    C = est.ipw_constraint(X, s, z)
    return X, y, C


def bench(kernel, X, y, C, iters, repeat):
    args = (X, y, C.P, C.projector, C.q, np.zeros(X.shape[1]), 1.0, 0.5, lipschitz_constant(X),
            iters, 0.0, _pgm_py.LOGISTIC, False)
    best, steps = np.inf, 0
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = kernel(*args)
        best = min(best, time.perf_counter() - t0)
        steps = out[3]
    return best, steps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--iters", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    print(f"{'N':>7} {'d':>4} {'steps':>6} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for N, d in [(500, 10), (2000, 15), (10000, 15), (50000, 30)]:
        X, y, C = problem(N, d)
        tp, steps = bench(_pgm_py.run_pgm, X, y, C, a.iters, a.repeat)
        if _pgm_core is None:
            print(f"{N:>7} {d:>4} {steps:>6} {tp * 1e3:>10.1f} {'n/a':>10} {'':>8}")
            continue
        tc, _ = bench(_pgm_core.run_pgm, X, y, C, a.iters, a.repeat)
        print(f"{N:>7} {d:>4} {steps:>6} {tp * 1e3:>10.1f} {tc * 1e3:>10.1f} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
