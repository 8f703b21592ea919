"""Acceptance suite: one test per criterion, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion (a failed criterion shows as a pytest failure instead).
"""

import time

import numpy as np
import pytest

from greenolt.chassis import ChassisConfig, SleepPolicy, max_viable_mean_active
from greenolt.fabric import (
    CASCADED_2X2,
    SwitchFabric,
    cascaded_saving,
    nxn_saving,
    reconfig_compliant,
)
from greenolt.markov import (
    ChainState,
    analytic_saving,
    build_state_space,
    build_transition_matrix,
    solve_stationary,
    state_index,
    total_variation,
    walk_occupancy,
)
from greenolt.simulator import simulate
from greenolt.traffic import (
    TrafficTrace,
    constant_trace,
    estimate_hurst,
    poisson_trace,
    self_similar_trace,
)
from greenolt._kernels import _pure

CFG = ChassisConfig()  # 4 cards, 10 Gb/s, 2 ms, 10^4-bit packets
POLICY = SleepPolicy()  # M = N = 2
T = CFG.cycle_length


def _pass(number, message):
    print(f"PASS criterion {number}: {message}")


def test_criterion_01_row_stochasticity():
    """Row sums within 1e-12 across the whole (lambda, M, N) grid, < 10 s."""
    t0 = time.time()
    worst = 0.0
    for gbps in (1, 5, 10, 20, 30, 40):
        lam = gbps * 1e9 / CFG.packet_bits
        for m in (1, 2, 4):
            for n in (1, 2, 4):
                matrix = build_transition_matrix(CFG, SleepPolicy(m, n), lam)
                worst = max(
                    worst, float(np.max(np.abs(matrix.probabilities.sum(1) - 1.0)))
                )
    elapsed = time.time() - t0
    assert worst <= 1e-12
    assert elapsed < 10.0
    _pass(1, f"54 matrices, worst row-sum error {worst:.2e}, {elapsed:.2f}s")


def test_criterion_02_stationary_vs_monte_carlo():
    """Analytic pi vs 1e6-step walk: TV <= 0.02 for 3 settings, < 1 min each."""
    settings = [(10.0, 1, 2, 11), (20.0, 2, 2, 22), (30.0, 2, 4, 33)]
    worst = 0.0
    for gbps, m, n, seed in settings:
        t0 = time.time()
        lam = gbps * 1e9 / CFG.packet_bits
        matrix = build_transition_matrix(CFG, SleepPolicy(m, n), lam)
        dist = solve_stationary(matrix)
        walked = walk_occupancy(matrix, 10**6, seed=seed)
        tv = total_variation(dist, walked)
        elapsed = time.time() - t0
        assert tv <= 0.02, (gbps, m, n, tv)
        assert elapsed < 60.0
        worst = max(worst, tv)
    _pass(2, f"3 settings, worst total-variation distance {worst:.4f}")


def test_criterion_03_simulator_matches_chain():
    """Simulated mean active cards within 5% of the stationary mean at
    5, 20 and 35 Gb/s over 1e6 cycles."""
    worst = 0.0
    for gbps, seed in ((5.0, 101), (20.0, 102), (35.0, 103)):
        lam = gbps * 1e9 / CFG.packet_bits
        trace = poisson_trace(lam, 10**6, T, seed=seed)
        report = simulate(CFG, POLICY, trace)
        dist = solve_stationary(build_transition_matrix(CFG, POLICY, lam))
        rel = abs(report.mean_active_cards / dist.mean_active_cards - 1.0)
        assert rel <= 0.05, (gbps, report.mean_active_cards, dist.mean_active_cards)
        worst = max(worst, rel)
    _pass(3, f"worst relative mean-active-cards error {worst:.4%}")


def test_criterion_04_max_saving_regime():
    """Constant 5 Gb/s on the 4-card chassis: one card suffices, so the
    long-run saving sits in [0.70, 0.75] and tends to 0.75."""
    report = simulate(CFG, POLICY, constant_trace(5e9, 10**4, T))
    assert 0.70 <= report.energy_saving <= 0.75
    longer = simulate(CFG, POLICY, constant_trace(5e9, 10**5, T))
    assert longer.energy_saving > report.energy_saving
    assert longer.energy_saving == pytest.approx(0.75, abs=1e-3)
    _pass(4, f"saving {report.energy_saving:.4f} at 1e4 cycles, "
             f"{longer.energy_saving:.5f} at 1e5")


def test_criterion_05_trend_suite():
    """Savings: non-increasing in lambda and M, non-decreasing in N;
    simulated self-similar delay non-decreasing in N. >= 4 points each."""

    def solve_saving(policy, lam):
        return analytic_saving(
            solve_stationary(build_transition_matrix(CFG, policy, lam)), CFG
        )

    lam_savings = [
        solve_saving(POLICY, gbps * 1e9 / CFG.packet_bits)
        for gbps in (5, 10, 20, 30, 40)
    ]
    assert all(a >= b - 1e-12 for a, b in zip(lam_savings, lam_savings[1:]))

    lam = 2e6  # 20 Gb/s
    m_savings = [solve_saving(SleepPolicy(m, 2), lam) for m in (1, 2, 4, 8)]
    assert all(a >= b - 1e-12 for a, b in zip(m_savings, m_savings[1:]))

    n_savings = [solve_saving(SleepPolicy(2, n), lam) for n in (1, 2, 4, 8)]
    assert all(a <= b + 1e-12 for a, b in zip(n_savings, n_savings[1:]))

    trace = self_similar_trace(20e9, 0.8, 2**15, T, seed=11)
    delays = [
        simulate(CFG, SleepPolicy(2, n), trace).mean_delay for n in (1, 2, 4, 8)
    ]
    assert all(a <= b + 1e-15 for a, b in zip(delays, delays[1:])), delays
    _pass(5, "saving monotone in lambda/M/N; self-similar delay monotone in N "
             f"({', '.join(f'{d*1e3:.3f}ms' for d in delays)})")


def test_criterion_06_switch_power_break_even():
    """With a 0.2 W switch and 5 W cards on a 2-card shelf, the break-even
    mean active card count is exactly 1.96."""
    cfg = ChassisConfig(line_cards=2, switch_power=0.2, card_power=5.0)
    assert max_viable_mean_active(cfg) == 1.96
    _pass(6, "break-even mean active cards == 1.96 (bit exact)")


def test_criterion_07_cascaded_fabric_formulas():
    """Stage/element closed forms for P in {2,4,8,16}; the 30% load saving;
    cascaded never beats the N x N mapping across the load range."""
    for ports in (2, 4, 8, 16):
        fabric = SwitchFabric(topology=CASCADED_2X2, ports=ports)
        assert fabric.stage_count == int(np.log2(ports))
        assert fabric.element_count == ports - 1
    assert cascaded_saving(0.3) == pytest.approx(0.5)
    loads = [round(0.05 * i, 2) for i in range(1, 20)]
    for load in loads:
        assert cascaded_saving(load, line_cards=4) <= nxn_saving(load, 4) + 1e-12
    _pass(7, "stage/element counts, saving(0.3)=0.5, cascaded <= NxN on "
             f"{len(loads)} loads")


def test_criterion_08_reconfiguration_compliance():
    """5 ms passes EPON and fails GPON; 125 us passes GPON."""
    opto = SwitchFabric(reconfig_time=5e-3)
    fast = SwitchFabric(reconfig_time=125e-6)
    assert reconfig_compliant(opto, "EPON") is True
    assert reconfig_compliant(opto, "GPON") is False
    assert reconfig_compliant(fast, "GPON") is True
    _pass(8, "EPON/GPON compliance booleans bit-exact")


def test_criterion_09_traffic_generators():
    """Poisson dispersion in [0.95, 1.05]; Hurst 0.80 +/- 0.07 for the
    self-similar trace and 0.50 +/- 0.07 for the i.i.d. control."""
    counts = poisson_trace(1e6, 10**5, T, seed=11).packet_counts
    dispersion = counts.var() / counts.mean()
    assert 0.95 <= dispersion <= 1.05

    h_ss = estimate_hurst(self_similar_trace(20e9, 0.8, 2**16, T, seed=1))
    assert h_ss == pytest.approx(0.80, abs=0.07)

    h_iid = estimate_hurst(poisson_trace(1e6, 2**16, T, seed=21))
    assert h_iid == pytest.approx(0.50, abs=0.07)
    _pass(9, f"dispersion {dispersion:.3f}, H(self-similar) {h_ss:.3f}, "
             f"H(iid) {h_iid:.3f}")


def test_criterion_10_conservation_and_fifo():
    """Bytes conserved exactly and FIFO never violated on random traces."""
    rng = np.random.default_rng(2024)
    idx = state_index(build_state_space(4, 2, 2))
    for _ in range(25):
        cycles = int(rng.integers(10, 200))
        counts = rng.poisson(rng.uniform(100, 5000), cycles).astype(np.int64)
        sizes = rng.integers(64, 1519, size=cycles)
        totals = counts * sizes
        trace = TrafficTrace(T, counts, totals, kind="poisson")

        report = simulate(CFG, POLICY, trace, backlog_cap=10**12)
        assert report.served_bytes + report.final_backlog == report.arrived_bytes

        *_, status, completions = _pure.simulate_cycles(
            counts,
            totals,
            4,
            2,
            2,
            CFG.cycle_bits_per_card,
            int(CFG.cycle_bits_per_card / 8),
            idx[ChainState.active(4)],
            10**12,
            record_completions=True,
        )
        assert status == 0
        finished = [
            (c, int(done)) for c, done in enumerate(completions) if done >= 0
        ]
        for (c0, d0), (c1, d1) in zip(finished, finished[1:]):
            assert d0 <= d1  # FIFO: earlier blocks never finish later
        for c, d in finished:
            assert d >= c
    _pass(10, "25 random traces: exact byte conservation, FIFO order intact")
