"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from saa_certify import kernels
from saa_certify.polyhedral import enumerate_extreme_rays, lp_solve
from saa_certify.vc import FiniteTrace, empirical_vc


def _random_pointed(rng, m1, n1):
    while True:
        W = rng.uniform(-0.5, 1.0, size=(m1, n1))
        if np.linalg.matrix_rank(W) == m1:
            return W


def workloads():
    rng = np.random.default_rng(0)
    trace = FiniteTrace(points=range(16), sets=rng.integers(0, 2, size=(2000, 16)))
    Ws = [_random_pointed(rng, 6, 24) for _ in range(5)]
    m, n = 40, 80
    A = rng.uniform(-1, 1, (m, n))
    b = A @ rng.uniform(0, 1, n)
    c = rng.uniform(0, 1, n)
    return {
        "shattering (16 points, 2000 sets)": lambda: empirical_vc(trace),
        "double description (5 x 6x24)": lambda: [enumerate_extreme_rays(W) for W in Ws],
        "simplex (40x80)": lambda: lp_solve(c, A, b),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the Python fallback is available")
    before = kernels.backend
    print(f"{'workload':40s}" + "".join(f"{b:>14s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, fn in workloads().items():
        times = {}
        for b in backends:
            kernels.use_backend(b)
            fn()  # warm up
            times[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        row = f"{name:40s}" + "".join(f"{times[b] * 1e3:12.2f}ms" for b in backends)
        if len(backends) > 1:
            row += f"{times['python'] / times['compiled']:11.1f}x"
        print(row)
    kernels.use_backend(before)


if __name__ == "__main__":
    main()
