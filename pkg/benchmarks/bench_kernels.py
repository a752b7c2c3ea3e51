#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--sizes 256,1024,4096]
The same inputs are fed to both backends and the outputs compared, so this
doubles as a parity check.
"""

import argparse
import importlib
import os
import sys
import time

import numpy as np


def _load_backends():
    os.environ.pop("KM_PURE_PYTHON", None)
    from kmroth._kernels import _core  # noqa: F401  (fails -> no compiled build)
    from kmroth._kernels import pyref

    try:
        from kmroth._kernels import _core as compiled
    except ImportError:
        compiled = None
    return compiled, pyref


def bench(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="128,512,2048,8192")
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    try:
        compiled, pyref = _load_backends()
    except ImportError:
        print("compiled extension not built; run pip install -e . first")
        return 1

    from kmroth.groups import make_group

    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'|G|':>6}  {'cython':>10}  {'numpy':>10}  {'speedup':>8}")
    for n in sizes:
        g = make_group(f"Z{n}")
        dens = 0.3
        f = (rng.random(n) < dens).astype(np.int64)
        h = (rng.random(n) < dens).astype(np.int64)
        coords = g.coords_table
        orders = np.asarray(g.orders, dtype=np.int64)
        strides = g.strides
        tc, out_c = bench(compiled.conv_int64, f, h, coords, orders, strides, False)
        tp, out_p = bench(pyref.conv_int64, f, h, coords, orders, strides, False)
        assert np.array_equal(out_c, out_p)
        print(f"{'conv_int64':<14}{n:>6}  {tc:>9.4f}s  {tp:>9.4f}s  {tp / tc:>7.1f}x")

        mask = (rng.random(n) < dens).astype(np.uint8)
        tc, out_c = bench(compiled.count_3aps_mask, mask, coords, orders, strides)
        tp, out_p = bench(pyref.count_3aps_mask, mask, coords, orders, strides)
        assert out_c == out_p
        print(f"{'count_3aps':<14}{n:>6}  {tc:>9.4f}s  {tp:>9.4f}s  {tp / tc:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
