"""Timing comparison of the compiled kernels against the numpy fallbacks.

Run from the repository root:

    python benchmarks/bench_backends.py

Covers the two hot paths: batched hypergeometric series (dominates the
Volterra kernel matrices and the kernel-identity quadrature) and the
ordered iterated-integral sums (dominate general-kernel chaos sampling).
"""
import time

import numpy as np

from gderiv import _kernels_py

try:
    from gderiv import _fastkern
except ImportError:
    _fastkern = None


def bench(fn, *args, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    rows = []

    w = rng.uniform(0.0, 0.9, 200_000)
    rows.append(("hyp2f1 series, 200k points", (0.2, -0.2, 1.2, w)))

    n, paths = 64, 20_000
    dw = 0.05 * rng.standard_normal((paths, n))
    k2 = np.tril(rng.standard_normal((n, n)), k=-1)
    k3 = rng.standard_normal((n, n, n))

    impls = {"python": _kernels_py}
    if _fastkern is not None:
        impls["cython"] = _fastkern

    print(f"{'kernel':38s}" + "".join(f"{name:>12s}" for name in impls))
    label, args = rows[0]
    times = [bench(impl.hyp2f1_series, *args) for impl in impls.values()]
    print(f"{label:38s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times))

    label = f"iterated_sum2, {paths} x {n}"
    times = [bench(impl.iterated_sum2, k2, dw) for impl in impls.values()]
    print(f"{label:38s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times))

    label = f"iterated_sum3, {paths} x {n}"
    times = [bench(impl.iterated_sum3, k3, dw, repeat=3)
             for impl in impls.values()]
    print(f"{label:38s}" + "".join(f"{t * 1e3:10.1f}ms" for t in times))

    if _fastkern is None:
        print("\ncompiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
