"""Compiled core vs numpy fallback on the hot kernels.

Run ``python benchmarks/bench_kernels.py`` after building the extension
(``pip install -e . --no-build-isolation``). Each case is timed with both
backends and the results are checked for agreement before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from fbm_lab import _backend, kernel
from fbm_lab.kernel import KernelSpec, cell_weight_matrix


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cell_case(h: float, n: int):
    spec = KernelSpec.volterra(h)

    def run(name):
        def go():
            kernel._cell_means.cache_clear()
            return cell_weight_matrix(spec, n, 1.0 / n, backend=name)
        return go

    return f"cell weights H={h} n={n}", run


def euler_case(kind: str, replicas: int, steps: int, dim: int):
    rng = np.random.default_rng(0)
    base = np.cumsum(rng.normal(scale=0.1, size=(replicas, steps + 1, dim)), axis=1)
    a = np.eye(dim) + 0.1 * np.triu(np.ones((dim, dim)), 1)

    def run(name):
        mod = _backend.get_backend(name)
        if kind == "affine":
            return lambda: mod.euler_affine(base, -a, np.zeros(dim), 0.01)
        return lambda: mod.euler_perturbed(base, 1.0, 0.3, 0.01)

    return f"euler {kind} R={replicas} steps={steps} d={dim}", run


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args()
    try:
        _backend.get_backend("cython")
    except ImportError:
        raise SystemExit("compiled core not built; nothing to compare")

    n = 256 if args.quick else 1024
    cases = [
        cell_case(0.3, n),
        cell_case(0.7, n),
        euler_case("affine", 256, 4096 if not args.quick else 512, 1),
        euler_case("affine", 256, 4096 if not args.quick else 512, 3),
        euler_case("perturbed", 256, 4096 if not args.quick else 512, 1),
    ]
    print(f"{'case':44s} {'cython [s]':>11s} {'python [s]':>11s} {'speedup':>8s}")
    for label, run in cases:
        a, b = run("cython")(), run("python")()
        if not np.allclose(a, b, rtol=1e-12, atol=1e-14):
            raise SystemExit(f"{label}: backends disagree")
        tc = best_of(run("cython"), args.repeat)
        tp = best_of(run("python"), args.repeat)
        print(f"{label:44s} {tc:11.4f} {tp:11.4f} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
