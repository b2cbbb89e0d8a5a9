#!/usr/bin/env python3
"""Timing comparison of the compiled kernel core against the NumPy fallback.

Measures the dense primitives on workload-shaped inputs (the defaults match
the canonical experiment: 2000 samples, 16 features, one hidden layer of 64,
4 classes) and prints best-of-N wall times for both backends side by side.

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --n 10000 --hidden 256 --repeats 11
"""

import argparse
import math
import time

import numpy as np

from ruc._kernels import pure

try:
    from ruc._kernels import _core as compiled
except ImportError:
    compiled = None


def best_of(fn, args, repeats):
    fn(*args)  # warm up (allocations, code paths)
    best = math.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def build_cases(n, dim, hidden, classes):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n, dim))
    w = rng.standard_normal((dim, hidden))
    b = rng.standard_normal(hidden)
    z = rng.standard_normal((n, hidden))
    dz = rng.standard_normal((n, hidden))
    logits = rng.standard_normal((n, classes))
    return [
        ("affine", (x, w, b)),
        ("affine_grads", (x, w, dz)),
        ("relu", (z,)),
        ("relu_grad", (z, dz)),
        ("softmax", (logits,)),
        ("sqdist", (x, x)),
    ]


def main():
    parser = argparse.ArgumentParser(
        description="benchmark the compiled kernels against the NumPy fallback"
    )
    parser.add_argument("--n", type=int, default=2000, help="batch size (default 2000)")
    parser.add_argument("--dim", type=int, default=16, help="input features (default 16)")
    parser.add_argument("--hidden", type=int, default=64, help="hidden width (default 64)")
    parser.add_argument("--classes", type=int, default=4, help="output classes (default 4)")
    parser.add_argument(
        "--repeats", type=int, default=7, help="timed repetitions, best kept (default 7)"
    )
    args = parser.parse_args()

    if compiled is None:
        print("compiled backend not built; timing the NumPy fallback only\n")

    print(
        f"n={args.n} dim={args.dim} hidden={args.hidden} classes={args.classes} "
        f"(best of {args.repeats})\n"
    )
    header = f"{'kernel':<14} {'pure [ms]':>12} {'compiled [ms]':>14} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name, call_args in build_cases(args.n, args.dim, args.hidden, args.classes):
        t_pure = best_of(getattr(pure, name), call_args, args.repeats)
        if compiled is not None:
            t_comp = best_of(getattr(compiled, name), call_args, args.repeats)
            ratio = t_pure / t_comp if t_comp > 0 else math.inf
            print(
                f"{name:<14} {t_pure * 1e3:>12.3f} {t_comp * 1e3:>14.3f} {ratio:>8.2f}x"
            )
        else:
            print(f"{name:<14} {t_pure * 1e3:>12.3f} {'-':>14} {'-':>9}")


if __name__ == "__main__":
    main()
