#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Both backends run the same inputs; results are checked for bit equality
before timings are reported. Usage: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from greenolt._kernels import _pure
from greenolt.chassis import ChassisConfig, SleepPolicy
from greenolt.markov import (
    ChainState,
    build_state_space,
    build_transition_matrix,
    state_index,
)

try:
    from greenolt._kernels import _speed
except ImportError:
    _speed = None

CYCLES = 1_000_000
WALK_STEPS = 1_000_000


def _time(fn, *args, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_simulator(cfg, policy):
    rng = np.random.default_rng(0)
    counts = rng.poisson(4000, CYCLES).astype(np.int64)
    totals = counts * 1250
    idx = state_index(build_state_space(cfg.line_cards, policy.listen_down,
                                        policy.listen_up))
    args = (
        counts,
        totals,
        cfg.line_cards,
        policy.listen_down,
        policy.listen_up,
        cfg.cycle_bits_per_card,
        int(cfg.cycle_bits_per_card / 8),
        idx[ChainState.active(cfg.line_cards)],
        10**12,
    )
    t_pure, r_pure = _time(_pure.simulate_cycles, *args)
    row = [f"simulate_cycles ({CYCLES:,} cycles)", f"{t_pure:8.3f}s"]
    if _speed is not None:
        t_fast, r_fast = _time(_speed.simulate_cycles, *args)
        identical = all(
            np.array_equal(a, b) if isinstance(a, np.ndarray) else a == b
            for a, b in zip(r_pure, r_fast)
        )
        assert identical, "backend results diverged"
        row += [f"{t_fast:8.3f}s", f"{t_pure / t_fast:7.1f}x"]
    return row


def bench_walk(cfg, policy):
    matrix = build_transition_matrix(cfg, policy, 2e6)
    cum = np.cumsum(matrix.probabilities, axis=1)
    uniforms = np.random.default_rng(1).random(WALK_STEPS)
    t_pure, r_pure = _time(_pure.chain_walk, cum, uniforms, 3)
    row = [f"chain_walk ({WALK_STEPS:,} steps)", f"{t_pure:8.3f}s"]
    if _speed is not None:
        t_fast, r_fast = _time(_speed.chain_walk, cum, uniforms, 3)
        assert np.array_equal(r_pure, r_fast), "backend results diverged"
        row += [f"{t_fast:8.3f}s", f"{t_pure / t_fast:7.1f}x"]
    return row


def main():
    cfg = ChassisConfig()
    policy = SleepPolicy()
    rows = [bench_simulator(cfg, policy), bench_walk(cfg, policy)]
    headers = ["kernel", "pure"]
    if _speed is not None:
        headers += ["cython", "speedup"]
    else:
        print("compiled backend not available; timing the fallback only\n")
    widths = [max(len(h), max(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    print("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    print("  ".join("-" * w for w in widths))
    for row in rows:
        print("  ".join(c.ljust(w) for c, w in zip(row, widths)))


if __name__ == "__main__":
    main()
