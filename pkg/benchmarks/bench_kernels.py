#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Runs the two hot loops (Lax-Oleinik sweep, velocity-Verlet ensemble) on
representative workloads and prints a timing table.  Results are checked to
agree between backends before timing.
"""

import time

import numpy as np

from toruswkb import kernels
from toruswkb.kernels import numpy_impl


def timeit(fn, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_lax(N=512, W=45, sweeps=200):
    rng = np.random.default_rng(0)
    u = rng.normal(size=N)
    v_half = np.cos(2 * np.pi * np.arange(2 * N) / (2 * N))

    def run(impl):
        x = u.copy()
        for _ in range(sweeps):
            x = impl.lax_step_1d(x, v_half, 0.05, 2.0, W, -1, True)
        return x

    rows = [("lax_step_1d numpy", timeit(lambda: run(numpy_impl)), run(numpy_impl))]
    if kernels.compiled_impl is not None:
        out_c = run(kernels.compiled_impl)
        assert np.abs(out_c - rows[0][2]).max() < 1e-10, "backend mismatch"
        rows.append(("lax_step_1d compiled",
                     timeit(lambda: run(kernels.compiled_impl)), out_c))
    return [(name, t) for name, t, _ in rows]


def bench_verlet(particles=1000, steps=5000):
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 2 * np.pi, particles)
    eta = rng.normal(size=particles)
    freqs = np.array([1], dtype=np.int64)
    coefs = np.array([1.0])

    def run(impl):
        return impl.verlet_flow_1d(x, eta, freqs, coefs, 1e-3, steps)

    rows = [("verlet_flow_1d numpy", timeit(lambda: run(numpy_impl)), run(numpy_impl))]
    if kernels.compiled_impl is not None:
        xc, ec = run(kernels.compiled_impl)
        xn, en = rows[0][2]
        assert np.abs(xc - xn).max() < 1e-9 and np.abs(ec - en).max() < 1e-9
        rows.append(("verlet_flow_1d compiled",
                     timeit(lambda: run(kernels.compiled_impl)), (xc, ec)))
    return [(name, t) for name, t, _ in rows]


def main():
    print(f"selected backend: {kernels.BACKEND}")
    print(f"{'kernel':28s} {'best (s)':>10s} {'speedup':>8s}")
    for group in (bench_lax(), bench_verlet()):
        base = group[0][1]
        for name, t in group:
            print(f"{name:28s} {t:10.4f} {base / t:7.1f}x")


if __name__ == "__main__":
    main()
