#!/usr/bin/env python3
"""Benchmark the compiled kernel against the numpy fallback.

Times the two hot operations (combination-key enumeration and per-record
missing counts) on synthetic datasets of growing size, then prints a table.

Usage: python benchmarks/bench_backends.py [--records 100000] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time
from math import comb

import numpy as np

from combocov import _kernels_py

try:
    from combocov import _kernels

    BACKENDS = [("compiled", _kernels), ("python", _kernels_py)]
except ImportError:
    _kernels = None
    BACKENDS = [("python", _kernels_py)]
    print("note: compiled extension not built; timing the fallback only\n")


def synth(n: int, sizes: tuple[int, ...], seed: int):
    rng = np.random.default_rng(seed)
    assign = np.column_stack(
        [rng.integers(0, size, n, dtype=np.int64) for size in sizes]
    )
    base = np.cumsum([0] + list(sizes[:-1])).astype(np.int64)
    width = max(1, (sum(sizes) - 1).bit_length())
    return np.ascontiguousarray(assign), base, width


def best_of(repeat: int, fn, *args) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return min(times)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--records", type=int, default=100_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    sizes = (10, 2, 4, 25)  # four factors, t=2: six combinations per record
    t = 2
    m = comb(len(sizes), t)
    print(f"factors {sizes}, t={t} ({m} combinations per record)\n")
    header = f"{'records':>10} {'op':>10}"
    for name, _ in BACKENDS:
        header += f" {name + ' (ms)':>16}"
    if len(BACKENDS) == 2:
        header += f" {'speedup':>9}"
    print(header)

    for n in (1_000, 10_000, args.records):
        assign, base, width = synth(n, sizes, seed=7)
        src_assign, _, _ = synth(max(n // 2, 1), sizes, seed=11)
        src = np.unique(_kernels_py.enumerate_keys(src_assign, base, t, width))

        for op, fn_args in (
            ("enumerate", (assign, base, t, width)),
            ("missing", (assign, base, t, width, src)),
        ):
            row = f"{n:>10} {op:>10}"
            timings = []
            for _, mod in BACKENDS:
                fn = mod.enumerate_keys if op == "enumerate" else mod.missing_per_record
                timings.append(best_of(args.repeat, fn, *fn_args))
                row += f" {timings[-1] * 1e3:>16.3f}"
            if len(timings) == 2:
                row += f" {timings[1] / timings[0]:>8.1f}x"
            print(row)

    if _kernels is not None:
        # equality spot check so the numbers above compare identical work
        assign, base, width = synth(10_000, sizes, seed=3)
        a = np.sort(_kernels.enumerate_keys(assign, base, t, width), axis=1)
        b = np.sort(_kernels_py.enumerate_keys(assign, base, t, width), axis=1)
        assert np.array_equal(a, b), "backend results diverge"
        print("\nbackends agree on a 10k-record spot check")


if __name__ == "__main__":
    main()
