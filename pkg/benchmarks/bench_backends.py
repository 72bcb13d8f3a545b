"""Benchmark the compiled kernels against the pure-numpy fallback.

Usage: python benchmarks/bench_backends.py [--repeats N]

Times the four hot kernels on representative problem sizes (the defaults
used by the training pipeline) and prints per-call times plus the
compiled/python speedup.
"""

import argparse
import time

import numpy as np

from mprim import kernels


def _time(fn, repeats):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def make_cases(rng):
    z = np.linspace(0.0, 1.0, 150)
    centers = np.linspace(0.0, 1.0, 10)
    width = (centers[1] - centers[0]) ** 2

    sizes = (10, 64, 64, 56)
    weights = [rng.standard_normal((a, b))
               for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [rng.standard_normal(b) for b in sizes[1:]]
    x = rng.standard_normal((32, sizes[0]))
    delta = rng.standard_normal((32, sizes[-1]))

    n_dmp = 25
    ts = np.linspace(0.0, 1.0, n_dmp)
    dmp_centers = np.exp(-25.0 / 3.0 * ts)
    dmp_widths = np.empty(n_dmp)
    dmp_widths[:-1] = 4.0 / np.diff(dmp_centers) ** 2
    dmp_widths[-1] = dmp_widths[-2]
    dmp_args = (rng.standard_normal(7), rng.standard_normal(7),
                rng.standard_normal((7, n_dmp)), dmp_centers, dmp_widths,
                7.6, 25.0, 6.25, 25.0 / 3.0, 7.6 / 1490.0, 1491)

    def bench(backend):
        acts = backend.mlp_forward_acts(x, weights, biases)
        return {
            "basis_matrix 150x10":
                lambda: backend.basis_matrix(z, centers, width),
            "mlp_forward 32x(10-64-64-56)":
                lambda: backend.mlp_forward_acts(x, weights, biases),
            "mlp_backward 32x(10-64-64-56)":
                lambda: backend.mlp_backward_acts(acts, weights, delta),
            "dmp_rollout 7 joints, 1491 steps":
                lambda: backend.dmp_rollout(*dmp_args),
        }

    return bench


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    bench = make_cases(rng)
    py = bench(kernels.get_backend("python"))
    if not kernels.COMPILED_AVAILABLE:
        print("compiled backend not built; timing the python backend only")
        for name, fn in py.items():
            print(f"{name:36s} {1e6 * _time(fn, args.repeats):9.1f} us")
        return
    cy = bench(kernels.get_backend("compiled"))

    print(f"{'kernel':36s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name in py:
        tp = _time(py[name], args.repeats)
        tc = _time(cy[name], args.repeats)
        print(f"{name:36s} {1e6 * tp:8.1f} us {1e6 * tc:8.1f} us "
              f"{tp / tc:7.2f}x")


if __name__ == "__main__":
    main()
