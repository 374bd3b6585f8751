"""Time the compiled kernels against the pure-Python twins.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Both backends are run on identical inputs; the script also checks that their
outputs agree.
"""

import argparse
import time

import numpy as np

from stablelab import _pykernels
from stablelab.core import random_class, threshold_class

try:
    from stablelab import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat):
    times, result = [], None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def cases():
    # one outer trial of the list learner bench: 650 blocks + holdout over 64 cells
    counts = np.full(64, 35_432_353_000 // 64, dtype=np.int64)
    total = int(counts.sum())
    n0 = 54_511_313
    sizes = [n0] * 650
    sizes.append(total - sum(sizes))
    yield "split_counts 651x64 (3.5e10 items)", "split_counts", (counts, sizes, 17)
    yield "hypergeometric 10k draws (1e10 pop)", "hypergeometric_draws", (10**10, 2 * 10**10, 10**9, 5, 10_000)
    H = random_class(12, 60, 3)
    yield "littlestone |H|=60 N=12", "littlestone", (H.columns, len(H))
    yield "vc |H|=60 N=12", "vc_dimension", ([h.bits for h in H], 12)
    T = threshold_class(16)
    yield "threshold dim thresholds(16)", "threshold_dimension", (T.columns, len(T), 16, 16)
    yield "threshold dim |H|=60 N=12", "threshold_dimension", (H.columns, len(H), 12, 12)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; only the Python timings are shown")
    print(f"{'kernel':40s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}  agree")
    for label, name, call_args in cases():
        py_t, py_out = best_of(lambda: getattr(_pykernels, name)(*call_args), args.repeat)
        if _ckernels is None:
            print(f"{label:40s} {py_t:10.4f} {'-':>11s} {'-':>8s}  -")
            continue
        c_t, c_out = best_of(lambda: getattr(_ckernels, name)(*call_args), args.repeat)
        agree = np.array_equal(np.asarray(py_out), np.asarray(c_out))
        print(f"{label:40s} {py_t:10.4f} {c_t:11.5f} {py_t / max(c_t, 1e-9):8.1f}  {agree}")


if __name__ == "__main__":
    main()
