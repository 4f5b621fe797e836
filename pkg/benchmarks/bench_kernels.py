#!/usr/bin/env python3
"""Benchmark the compiled strip kernels against the NumPy fallback.

Times the three kernel stages on a sweep-sized workload (node generation,
P1 evaluation, concentrated load assembly) and prints one table.

Usage: python benchmarks/bench_kernels.py [n] [eps]
"""

import math
import sys
import time

import numpy as np

import striphom.concentration as conc
from striphom import _kernels
from striphom.assembly import assemble_concentrated_load
from striphom.concentration import StripRegion, canonical_family, v0_constant
from striphom.fields import FEField
from striphom.geometry import build_uniform_mesh
from striphom.oscillation import periodic_profile
from striphom.quadrature import composite_gl
from striphom.solver import make_nonlinearity


def bench(fn, repeats=5):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 256
    eps = float(sys.argv[2]) if len(sys.argv) > 2 else 8.0 / n
    profile = periodic_profile(2.0, 1.0, period=2.0 * math.pi)
    region = StripRegion(eps, profile)
    mesh = build_uniform_mesh(n)
    family = canonical_family(v0_constant(1.0), profile)
    f0 = make_nonlinearity("saturating", (1.0,), R=2.0)
    rng = np.random.default_rng(0)
    u = FEField(mesh, rng.uniform(-1.0, 1.0, mesh.num_vertices))

    sub = max(2, math.ceil((1.0 / n) / (eps * profile.l0 / 8.0)))
    xq, wx = composite_gl(0.0, 1.0, n * sub, 4)
    gq = profile.G_eps(eps, xq)

    print(f"n={n} eps={eps:g} x-nodes={xq.size} backends={_kernels.available_backends()}")
    header = f"{'stage':<28}" + "".join(f"{b:>12}" for b in _kernels.available_backends())
    print(header)

    rows = {}
    for backend in _kernels.available_backends():
        _kernels.use_backend(backend)
        conc._STRIP_CACHE.clear()

        t_nodes, (xs, ys, ws) = bench(lambda: _kernels.strip_nodes(n, eps, xq, wx, gq))
        rows.setdefault("strip_nodes", []).append((t_nodes, ws.sum()))

        t_eval, vals = bench(lambda: _kernels.p1_eval(n, u.coeffs, xs, ys))
        rows.setdefault("p1_eval", []).append((t_eval, float(np.dot(ws, vals))))

        conc._STRIP_CACHE.clear()
        t_load, load = bench(lambda: assemble_concentrated_load(mesh, region, f0, u), repeats=3)
        rows.setdefault("concentrated_load", []).append((t_load, float(load.sum())))
    _kernels.use_backend("auto")

    for stage, res in rows.items():
        cells = "".join(f"{t * 1e3:>10.2f}ms" for t, _ in res)
        print(f"{stage:<28}{cells}")
        checks = [v for _, v in res]
        spread = max(checks) - min(checks)
        if abs(spread) > 1e-10 * max(1.0, abs(checks[0])):
            print(f"  WARNING: backend results differ by {spread:.3e}")
    if len(rows["strip_nodes"]) == 2:
        names = list(_kernels.available_backends())
        for stage, res in rows.items():
            speedup = res[names.index('python')][0] / res[names.index('cython')][0]
            print(f"{stage}: cython speedup x{speedup:.1f}")


if __name__ == "__main__":
    main()
