#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Covers the two hot paths: the stability-function determinant grid and the
banded convolution of the time stepper.  Run as

    python benchmarks/bench_accel.py

NFWAVES_THREADS caps the numba pool; NFWAVES_NO_NUMBA=1 would disable the
compiled path entirely (this script imports both explicitly, so leave it
unset here).
"""

import time

import numpy as np

import nfwaves as nf
from nfwaves import _accel
from nfwaves.evans import EvansContext


def timeit(fn, *args, repeat=5):
    fn(*args)  # warmup / compile
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_evans_grid():
    k = nf.section5_kernel()
    front = nf.front_at_tau(k, 0.1, 0.3, 20)
    ctx = EvansContext(front=front)
    v = front.crossings[:, None] - front.crossings[None, :]
    coef = front.disc.alphas / (front.mu * ctx.derivs)
    res = 256
    lam = (np.linspace(0, 5, res)[None, :]
           + 1j * np.linspace(0, 20, res)[:, None]).ravel()
    args = (lam, v, coef, front.mu, k.A, k.a, k.B, k.b)
    rows = []
    t_np = timeit(_accel.evans_grid_numpy, *args, repeat=3)
    rows.append(("numpy", t_np))
    if _accel.USE_NUMBA:
        t_nb = timeit(_accel._evans_grid_nb, *args, repeat=3)
        rows.append(("numba", t_nb))
        ref = _accel.evans_grid_numpy(*args)
        fast = _accel._evans_grid_nb(*args)
        assert np.max(np.abs(ref - fast)) < 1e-12
    print(f"stability grid ({res}x{res} determinants of "
          f"{v.shape[0]}x{v.shape[0]} complex matrices)")
    base = rows[0][1]
    for name, t in rows:
        print(f"  {name:6s}: {t * 1e3:9.1f} ms   x{base / t:5.1f}")


def bench_banded_conv():
    rng = np.random.default_rng(0)
    n, band = 4096, 4705
    f = rng.standard_normal(n + band - 1)
    w = rng.standard_normal(band)
    rows = [("numpy", timeit(_accel.banded_conv_numpy, f, w))]
    if _accel.USE_NUMBA:
        rows.append(("numba", timeit(_accel._banded_conv_nb, f, w)))
        assert np.allclose(_accel.banded_conv_numpy(f, w),
                           _accel._banded_conv_nb(f, w), atol=1e-10)
    print(f"banded convolution (n={n}, band={band})")
    base = rows[0][1]
    for name, t in rows:
        print(f"  {name:6s}: {t * 1e3:9.2f} ms   x{base / t:5.1f}")


if __name__ == "__main__":
    print(f"numba available: {_accel.USE_NUMBA}")
    bench_evans_grid()
    bench_banded_conv()
