"""Time the compiled vector kernels against the pure-Python fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--sizes 1000,10000,100000] [--repeats 7]

Reports the median wall time per call and the speedup of the compiled
backend.  Both backends produce bitwise-identical outputs (that property
is enforced by the test suite); this script only measures throughput.
"""

import argparse
import statistics
import time

import numpy as np

from samlab.kernels import load_backend
from samlab.rng import generator


def median_time(fn, repeats, inner):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn()
        times.append((time.perf_counter() - t0) / inner)
    return statistics.median(times)


def bench_size(d, repeats, backends):
    rng = generator(0)
    x = rng.standard_normal(d)
    y = rng.standard_normal(d)
    m = rng.standard_normal(d)
    out = np.empty(d)
    out_m = np.empty(d)
    # keep each timing loop around 1 ms cheap-call overhead territory
    inner = max(1, 200_000 // d)

    cases = {
        "dot": lambda k: (lambda: k.dot(x, y)),
        "axpy": lambda k: (lambda: k.axpy(0.3, x, y, out)),
        "momentum_update": lambda k: (lambda: k.momentum_update(
            0.9, 1e-4, 0.1, m, x, y, out_m, out)),
    }
    print(f"d = {d}")
    for name, make in cases.items():
        per = {label: median_time(make(mod), repeats, inner)
               for label, mod in backends.items()}
        speedup = per["pure"] / per["compiled"]
        print(f"  {name:<16} compiled {per['compiled'] * 1e6:10.2f} us   "
              f"pure {per['pure'] * 1e6:10.2f} us   speedup {speedup:6.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="1000,10000,100000",
                        help="comma-separated vector lengths")
    parser.add_argument("--repeats", type=int, default=7,
                        help="timing repeats; the median is reported")
    args = parser.parse_args()

    backends = {"compiled": load_backend("compiled"), "pure": load_backend("pure")}
    print(f"backends: compiled={backends['compiled'].__name__} "
          f"pure={backends['pure'].__name__}")
    for size in args.sizes.split(","):
        bench_size(int(size), args.repeats, backends)


if __name__ == "__main__":
    main()
