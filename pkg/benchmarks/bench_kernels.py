#!/usr/bin/env python3
"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Run without QCOMMIT_PURE_NUMPY so the jitted variants are actually compiled;
the table shows per-call times and the speedup of the jitted path.  The env
flag itself is for running the package without numba, not for benchmarking.
"""

import time

import numpy as np

from qcommit import _kernels as K


def timeit(fn, *args, repeat=5, number=1):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for _ in range(number):
            fn(*args)
        best = min(best, (time.perf_counter() - start) / number)
    return best


def main():
    rng = np.random.default_rng(0)
    rows = []

    n = 1_000_000
    a = rng.integers(-100_000, 100_000, size=(n, 4)).astype(np.int64)
    b = rng.integers(-100_000, 100_000, size=(n, 4)).astype(np.int64)
    K._interval_squared_batch_jit(a[:10], b[:10])  # compile
    rows.append(
        (
            f"interval_squared_batch (n={n})",
            timeit(K._interval_squared_batch_jit, a, b),
            timeit(K._interval_squared_batch_numpy, a, b),
        )
    )
    K._causal_code_batch_jit(a[:10], b[:10])
    rows.append(
        (
            f"causal_code_batch (n={n})",
            timeit(K._causal_code_batch_jit, a, b),
            timeit(K._causal_code_batch_numpy, a, b),
        )
    )

    d, m, n_anc = 3, 2, 9
    big = d**m * n_anc
    g = rng.normal(size=(big, d)) + 1j * rng.normal(size=(big, d))
    v, _ = np.linalg.qr(g)
    v = np.ascontiguousarray(v)
    K._clone_objective_and_grad_jit(v, d, m, n_anc)
    calls = 20_000

    def many_jit():
        for _ in range(calls):
            K._clone_objective_and_grad_jit(v, d, m, n_anc)

    def many_np():
        for _ in range(calls):
            K._clone_objective_and_grad_numpy(v, d, m, n_anc)

    rows.append(
        (
            f"clone_objective_and_grad x{calls} (d={d}, m={m}, anc={n_anc})",
            timeit(many_jit, repeat=3),
            timeit(many_np, repeat=3),
        )
    )

    print(f"{'kernel':55s} {'jit':>12s} {'numpy':>12s} {'speedup':>9s}")
    for name, t_jit, t_np in rows:
        print(f"{name:55s} {t_jit * 1e3:10.2f}ms {t_np * 1e3:10.2f}ms {t_np / t_jit:8.1f}x")
    print(f"\nselected backend at import: {K.BACKEND}")


if __name__ == "__main__":
    main()
