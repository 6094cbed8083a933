#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times batch classification per rule on synthetic Gaussian data and
prints per-query times plus the speedup. Run from the repo root:

    python benchmarks/bench_backends.py
    python benchmarks/bench_backends.py --m 20000 --d 32 --queries 500
"""

import argparse
import time

import numpy as np

from ldknn import backend
from ldknn.classifiers import DecisionRuleConfig, Rule, _shared_k
from ldknn.data import Dataset


def make_data(m, d, queries, seed=0):
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((m, d))
    features[m // 2:, -1] += 2.0
    labels = np.repeat(np.array([0, 1], dtype=np.int64), m - m // 2)[:m]
    train = Dataset(features, labels, ("1", "2"), "bench")
    return train, np.ascontiguousarray(rng.standard_normal((queries, d)))


def time_kernel(fn, args, repeats):
    fn(*args)  # warm-up (and JIT compile on the numba side)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--m", type=int, default=5000, help="training samples")
    parser.add_argument("--d", type=int, default=16, help="dimensions")
    parser.add_argument("--queries", type=int, default=200)
    parser.add_argument("--kpc", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args(argv)

    train, queries = make_data(args.m, args.d, args.queries)
    cfg = DecisionRuleConfig(rule=Rule.LD_GME, kpc=args.kpc)
    k = _shared_k(train, cfg)
    cases = [
        ("LD_GME", "ld_predict", (k, False, 1e-9, 1e-9)),
        ("LD_KDE", "ld_predict", (k, True, 1e-9, 1e-9)),
        ("V_KNN", "vknn_predict", (k,)),
        ("DW2_KNN", "dw_predict", (k, True)),
        ("CAP", "cap_predict", (args.kpc,)),
        ("NBC_GME", "nbc_predict", (False, 1e-9, 1e-9)),
    ]
    names = backend.available_backends()
    print(f"m={args.m} d={args.d} queries={args.queries} kpc={args.kpc} "
          f"(best of {args.repeats}, per-query microseconds)")
    header = f"{'rule':10s}" + "".join(f"{n:>12s}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10s}"
    print(header)
    for rule_name, kernel_name, extra in cases:
        times = {}
        for backend_name in names:
            kernel = getattr(backend.kernels(backend_name), kernel_name)
            call_args = (train.features, train.labels, train.n_classes, queries, *extra)
            times[backend_name] = time_kernel(kernel, call_args, args.repeats)
        row = f"{rule_name:10s}"
        for n in names:
            row += f"{times[n] / args.queries * 1e6:12.1f}"
        if len(names) == 2:
            row += f"{times['numpy'] / times['numba']:10.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
