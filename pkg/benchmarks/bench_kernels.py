"""Benchmark the compiled kernels against the pure numpy fallback.

Times the two hot kernels (separable Gaussian convolution, nearest-site
scan) and a full deconvolution solve under each backend, and verifies the
backends agree bitwise. Run as: python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from radarbev import _kernels_py
from radarbev.core import (
    BevMap,
    Channel,
    DENSITY_RANGE,
    GaussianKernel,
    GridSpec,
)
from radarbev.recover import DeconvParams, irl1_deconvolve

try:
    from radarbev import _kernels as _compiled
except ImportError:
    _compiled = None


def timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_conv(size=512, sigma=2.0):
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, (size, size))
    w = GaussianKernel(sigma).weights_1d()
    rows = []
    results = {}
    for name, mod in backends():
        t, out = timeit(lambda m=mod: m.gaussian_conv2d(x, w))
        rows.append((f"conv {size}x{size} sigma={sigma}", name, t))
        results[name] = out
    check_equal(results)
    return rows


def bench_voronoi(size=512, n_sites=400):
    rng = np.random.default_rng(1)
    grid = GridSpec(50.0, size)
    centers = grid.cell_centers()
    px = rng.uniform(-49, 49, n_sites)
    py = rng.uniform(-49, 49, n_sites)
    rows = []
    results = {}
    for name, mod in backends():
        t, out = timeit(lambda m=mod: m.nearest_site_labels(centers, centers, px, py),
                        repeats=3)
        rows.append((f"voronoi {size}x{size} x {n_sites} sites", name, t))
        results[name] = out
    check_equal(results)
    return rows


def bench_solve(size=128, sigma=2.0):
    import radarbev.kernels as kern

    rng = np.random.default_rng(2)
    kernel = GaussianKernel(sigma)
    occ = np.zeros((size, size))
    for _ in range(30):
        occ[rng.integers(6, size - 6), rng.integers(6, size - 6)] = 1.0
    blurred = np.clip(_kernels_py.gaussian_conv2d(occ, kernel.weights_1d()), 0, 1)
    m = BevMap(GridSpec(12.5, size), Channel.DENSITY, blurred, DENSITY_RANGE)
    params = DeconvParams(fista_iters=100, irl1_iters=2)

    rows = []
    results = {}
    saved = (kern.gaussian_conv2d, kern.nearest_site_labels)
    try:
        for name, mod in backends():
            kern.gaussian_conv2d = mod.gaussian_conv2d
            kern.nearest_site_labels = mod.nearest_site_labels
            t, res = timeit(lambda: irl1_deconvolve(m, kernel, params), repeats=2)
            rows.append((f"irl1 {size}x{size} (100x2 iters)", name, t))
            results[name] = res.sparse.values
    finally:
        kern.gaussian_conv2d, kern.nearest_site_labels = saved
    check_equal(results)
    return rows


def backends():
    out = [("python", _kernels_py)]
    if _compiled is not None:
        out.insert(0, ("compiled", _compiled))
    return out


def check_equal(results):
    if len(results) == 2:
        a, b = results.values()
        assert np.array_equal(a, b), "backends disagree"


def main():
    if _compiled is None:
        print("compiled extension not available; timing the fallback only\n")
    rows = bench_conv() + bench_conv(size=128) + bench_voronoi() + bench_solve()
    width = max(len(r[0]) for r in rows)
    by_case: dict[str, dict[str, float]] = {}
    for case, name, t in rows:
        by_case.setdefault(case, {})[name] = t
    print(f"{'case':<{width}}  {'compiled':>10}  {'python':>10}  {'speedup':>8}")
    for case, res in by_case.items():
        c = res.get("compiled")
        p = res.get("python")
        cs = f"{1e3 * c:.2f} ms" if c is not None else "-"
        ps = f"{1e3 * p:.2f} ms" if p is not None else "-"
        sp = f"{p / c:.2f}x" if c and p else "-"
        print(f"{case:<{width}}  {cs:>10}  {ps:>10}  {sp:>8}")
    print("\nbackends agree bitwise on every case")


if __name__ == "__main__":
    main()
