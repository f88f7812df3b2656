#!/usr/bin/env python3
"""Benchmark the compiled matching kernels against the numpy fallback.

Times the per-query min-distance profile (the evaluation hot loop) at a
few mosaic/embedding sizes and reports the speedup. Run from the repo
root after building the extension in place:

    python setup.py build_ext --inplace
    python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from mosaix import _pykernels  # noqa: E402

try:
    from mosaix import _speedups
except ImportError:
    _speedups = None

CASES = [
    # (patches per mosaic n=m, dim, repeats)
    (16, 64, 400),
    (50, 512, 60),
    (80, 1024, 20),
    (120, 1536, 8),
]


def time_fn(fn, q, t, repeats):
    fn(q, t)  # warm up
    best = float("inf")
    for _ in range(3):
        start = time.perf_counter()
        for _ in range(repeats):
            fn(q, t)
        best = min(best, (time.perf_counter() - start) / repeats)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"{'case':<22} {'python':>12} {'native':>12} {'speedup':>9}")
    for n, d, repeats in CASES:
        q = np.ascontiguousarray(rng.normal(size=(n, d)))
        t = np.ascontiguousarray(rng.normal(size=(n, d)))
        py = time_fn(_pykernels.min_sq_profile, q, t, repeats)
        if _speedups is None:
            print(f"float {n:>3}x{n} d={d:<5} {py * 1e3:>10.3f}ms {'(not built)':>12}")
            continue
        nat = time_fn(_speedups.min_sq_profile, q, t, repeats)
        a = _speedups.min_sq_profile(q, t)
        b = _pykernels.min_sq_profile(q, t)
        assert np.allclose(a, b, rtol=1e-12)
        print(f"float {n:>3}x{n} d={d:<5} {py * 1e3:>10.3f}ms {nat * 1e3:>10.3f}ms "
              f"{py / nat:>8.1f}x")

    for n, d, repeats in CASES:
        q = np.ascontiguousarray(rng.integers(0, 2, (n, d)), dtype=np.uint8)
        t = np.ascontiguousarray(rng.integers(0, 2, (n, d)), dtype=np.uint8)
        py = time_fn(_pykernels.min_hamming_profile, q, t, repeats)
        if _speedups is None:
            print(f"bits  {n:>3}x{n} d={d:<5} {py * 1e3:>10.3f}ms {'(not built)':>12}")
            continue
        nat = time_fn(_speedups.min_hamming_profile, q, t, repeats)
        assert np.array_equal(_speedups.min_hamming_profile(q, t),
                              _pykernels.min_hamming_profile(q, t))
        print(f"bits  {n:>3}x{n} d={d:<5} {py * 1e3:>10.3f}ms {nat * 1e3:>10.3f}ms "
              f"{py / nat:>8.1f}x")

    if _speedups is None:
        print("\ncompiled kernels not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
