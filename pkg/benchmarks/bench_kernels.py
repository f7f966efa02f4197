"""Time the RK4 variational kernel under both backends.

    python3 benchmarks/bench_kernels.py [--steps 4096] [--repeat 20]

Integrates the linearized flow along a latitude loop on the so(3)* sphere of
radius 1, with the same inputs handed to each backend, and reports the best
wall time per call together with the largest disagreement between the two.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from poisson_holonomy import kernels
from poisson_holonomy.holonomy import DEFAULT_EXTENSION
from poisson_holonomy.paths import TangentPath, lift_min_norm
from poisson_holonomy.presets import get_preset


def kernel_inputs(steps: int):
    pi = get_preset("so3").bivector
    loop = lift_min_norm(pi, TangentPath.circle([0, 0, 0.6], 0.8, axes=[[1, 0, 0], [0, 1, 0]]))
    seg = loop.segments[0]
    a, b = seg.interval
    h = (b - a) / steps
    grid = a + 0.5 * h * np.arange(2 * steps + 1)
    grid[-1] = b
    coeffs = DEFAULT_EXTENSION.covectors(seg, grid)
    return DEFAULT_EXTENSION.terms(pi), coeffs, np.array(loop.start, dtype=float), h


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args(argv)

    terms, coeffs, x0, h = kernel_inputs(args.steps)
    results = {}
    for backend in ("numpy", "numba"):
        if backend == "numba" and not kernels.HAVE_NUMBA:
            print("numba: unavailable (not installed or disabled by POISSON_HOLONOMY_DISABLE_NUMBA)")
            continue
        run = lambda: kernels.rk4_variational(*terms, coeffs, x0, h, backend=backend)  # noqa: E731
        t0 = time.perf_counter()
        results[backend] = run()  # first call includes jit compilation (or cache load)
        warm = time.perf_counter() - t0
        t = best_of(run, args.repeat)
        print(f"{backend:6s} first call {warm * 1e3:9.2f} ms   best {t * 1e3:9.3f} ms   "
              f"({args.steps} steps, {t / args.steps * 1e6:.2f} us/step)")
        results[backend + "_t"] = t

    if "numba" in results:
        diff = float(np.max(np.abs(results["numba"][1] - results["numpy"][1])))
        print(f"speedup {results['numpy_t'] / results['numba_t']:.1f}x, max |phi_numba - phi_numpy| = {diff:.1e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
