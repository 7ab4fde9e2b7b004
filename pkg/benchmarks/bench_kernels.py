#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the pure-python reference.

Runs each hot kernel on both backends and prints a speedup table.  The
mixture-sampling row reproduces the Monte Carlo per-trial inner loop
(label draw + per-component inverse CDF), which dominates simulation
run time.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from prevopt._kernels import reference as ref

try:
    from prevopt._kernels import _core as core
except ImportError:
    core = None


def best_of(fn, repeats=7):
    fn()  # warmup
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def mixture_sample(kmod, u2, q, burr_params, beta_params):
    labels = u2[:, 0] < q
    values = np.empty(u2.shape[0], dtype=np.float64)
    values[labels] = kmod.burr_ppf(u2[labels, 1], *burr_params)
    values[~labels] = kmod.beta_ppf(u2[~labels, 1], *beta_params)
    return values


def main():
    if core is None:
        print("compiled extension not built; nothing to compare")
        return 1

    rng = np.random.default_rng(1234)
    x_large = rng.random(100_000) * 3.0
    x_unit = rng.random(100_000)
    u_large = rng.random(100_000)
    u_small = rng.random(1_000)
    x_ll = rng.random(10_000)
    u2 = rng.random((1_000, 2))

    burr_params = (2.6, 0.18, 0.045)
    beta_params = (3.2, 0.8)

    lows = np.array([0.0, 0.3, 0.8])
    highs = np.array([0.1, 0.5, 1.0])
    closed = np.array([False, False, True])

    rows = [
        ("burr_pdf (100k)", lambda m: m.burr_pdf(x_large, *burr_params)),
        ("burr_cdf (100k)", lambda m: m.burr_cdf(x_large, *burr_params)),
        ("burr_ppf (100k)", lambda m: m.burr_ppf(u_large, *burr_params)),
        ("beta_pdf (100k)", lambda m: m.beta_pdf(x_unit, *beta_params)),
        ("beta_cdf (10k)", lambda m: m.beta_cdf(x_ll, *beta_params)),
        ("beta_ppf (1k)", lambda m: m.beta_ppf(u_small, *beta_params)),
        ("burr_log_likelihood (10k)", lambda m: m.burr_log_likelihood(x_ll, *burr_params)),
        ("beta_log_likelihood (10k)", lambda m: m.beta_log_likelihood(x_ll, *beta_params)),
        (
            "count_in_intervals (100k x 3)",
            lambda m: m.count_in_intervals(x_unit, lows, highs, closed),
        ),
        (
            "mixture sampling (1k trial)",
            lambda m: mixture_sample(m, u2, 0.23, burr_params, beta_params),
        ),
    ]

    name_w = max(len(name) for name, _ in rows)
    header = f"{'kernel':<{name_w}}  {'python':>10}  {'compiled':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, call in rows:
        t_py = best_of(lambda: call(ref))
        t_c = best_of(lambda: call(core))
        print(
            f"{name:<{name_w}}  {t_py * 1e3:>8.3f}ms  {t_c * 1e3:>8.3f}ms"
            f"  {t_py / t_c:>7.1f}x"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
