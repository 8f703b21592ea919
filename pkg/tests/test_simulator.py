import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from greenolt._kernels import _pure
from greenolt.chassis import ChassisConfig, SleepPolicy
from greenolt.markov import (
    ChainState,
    build_state_space,
    build_transition_matrix,
    next_state,
    solve_stationary,
    state_index,
)
from greenolt.simulator import (
    BacklogOverflowError,
    SimState,
    policy_step,
    simulate,
)
from greenolt.traffic import TrafficTrace, constant_trace, poisson_trace

try:
    from greenolt._kernels import _speed
except ImportError:  # pure-Python environment
    _speed = None

CFG = ChassisConfig()
POLICY = SleepPolicy()
T = CFG.cycle_length


def make_trace(counts, totals):
    return TrafficTrace(
        T,
        np.asarray(counts, dtype=np.int64),
        np.asarray(totals, dtype=np.int64),
        kind="constant",
    )


class TestSteadyRegimes:
    def test_low_constant_load_settles_on_one_card(self):
        trace = constant_trace(5e9, 10_000, T)
        report = simulate(CFG, POLICY, trace)
        assert 0.70 <= report.energy_saving <= 0.75
        assert report.mean_delay == 0.0
        assert report.final_backlog == 0
        assert report.state_occupancy[ChainState.active(1)] > 0.99

    def test_full_load_keeps_every_card_on(self):
        trace = constant_trace(40e9, 2000, T)
        report = simulate(CFG, POLICY, trace)
        assert report.energy_saving == 0.0
        assert report.mean_active_cards == 4.0
        assert report.reconfig_events == 0

    def test_zero_traffic_approaches_max_saving(self):
        trace = constant_trace(0.0, 10_000, T)
        report = simulate(CFG, POLICY, trace)
        # descent transient: (1 + M) cycles per level at 4, 3, 2 cards
        assert report.energy_saving == pytest.approx(0.75, abs=2e-3)
        assert report.final_backlog == 0
        assert report.served_packets == 0

    def test_saving_bounded_by_card_floor(self):
        for gbps in (0, 5, 15, 25, 40):
            trace = constant_trace(gbps * 1e9, 3000, T)
            report = simulate(CFG, POLICY, trace)
            assert 0.0 <= report.energy_saving <= 0.75


class TestAgainstAnalyticChain:
    def test_mean_active_cards_match(self):
        lam = 2e6  # 20 Gb/s equivalent
        trace = poisson_trace(lam, 200_000, T, seed=31)
        report = simulate(CFG, POLICY, trace)
        dist = solve_stationary(build_transition_matrix(CFG, POLICY, lam))
        assert report.mean_active_cards == pytest.approx(
            dist.mean_active_cards, rel=0.05
        )

    def test_occupancy_matches_stationary_distribution(self):
        lam = 1.5e6
        trace = poisson_trace(lam, 200_000, T, seed=32)
        report = simulate(CFG, POLICY, trace)
        dist = solve_stationary(build_transition_matrix(CFG, POLICY, lam))
        sim = np.array([report.state_occupancy[s] for s in dist.states])
        tv = 0.5 * np.abs(sim - dist.probabilities).sum()
        assert tv <= 0.02


class TestAccounting:
    def test_occupancy_sums_to_one(self):
        trace = poisson_trace(1e6, 5000, T, seed=2)
        report = simulate(CFG, POLICY, trace)
        assert sum(report.state_occupancy.values()) == pytest.approx(1.0)

    def test_reconfig_counts_level_changes(self):
        # 0 -> high -> 0 forces a climb and a descent
        counts = [0] * 20 + [3000] * 20 + [0] * 40
        totals = [c * 1250 for c in counts]
        report = simulate(CFG, POLICY, make_trace(counts, totals))
        assert report.reconfig_events > 0

    def test_cycle_length_mismatch_rejected(self):
        trace = constant_trace(1e9, 10, 1e-3)
        with pytest.raises(ValueError):
            simulate(CFG, POLICY, trace)

    def test_empty_trace_rejected(self):
        trace = make_trace([], [])
        with pytest.raises(ValueError):
            simulate(CFG, POLICY, trace)

    def test_backlog_overflow_signalled(self):
        # sustained 4x overload against a tiny cap
        trace = constant_trace(40e9, 200, T)
        cfg = ChassisConfig(line_cards=4)
        with pytest.raises(BacklogOverflowError):
            simulate(
                cfg,
                POLICY,
                trace,
                backlog_cap=10**6,
                initial_state=ChainState.active(1),
            )

    def test_delay_counted_for_buffered_cycles(self):
        # one burst worth 3 cycles of single-card service, then silence;
        # the chassis starts low and must wait N cycles before adding cards
        counts = [6000] + [0] * 30
        totals = [c * 1250 for c in counts]
        report = simulate(
            CFG, POLICY, make_trace(counts, totals),
            initial_state=ChainState.active(1),
        )
        assert report.mean_delay > 0.0
        assert report.max_delay >= 2 * T
        assert report.final_backlog == 0


@st.composite
def random_traces(draw):
    cycles = draw(st.integers(4, 60))
    counts, totals = [], []
    for _ in range(cycles):
        n = draw(st.integers(0, 4000))
        counts.append(n)
        if n == 0:
            totals.append(0)
        else:
            totals.append(n * draw(st.integers(64, 1518)))
    return make_trace(counts, totals)


class TestConservation:
    @given(trace=random_traces())
    @settings(max_examples=60, deadline=None)
    def test_bytes_conserved_exactly(self, trace):
        report = simulate(CFG, POLICY, trace, backlog_cap=10**12)
        assert report.served_bytes + report.final_backlog == report.arrived_bytes

    @given(trace=random_traces())
    @settings(max_examples=60, deadline=None)
    def test_fifo_completion_order(self, trace):
        idx = state_index(build_state_space(4, 2, 2))
        *_, status, completions = _pure.simulate_cycles(
            trace.packet_counts,
            trace.byte_totals,
            4,
            POLICY.listen_down,
            POLICY.listen_up,
            CFG.cycle_bits_per_card,
            int(CFG.cycle_bits_per_card / 8),
            idx[ChainState.active(4)],
            10**12,
            record_completions=True,
        )
        assert status == 0
        done = [
            (c, int(done_at))
            for c, done_at in enumerate(completions)
            if done_at >= 0
        ]
        # blocks finish in arrival order, never before they arrive
        for (c0, d0), (c1, d1) in zip(done, done[1:]):
            assert d0 <= d1
        for c, d in done:
            assert d >= c


class TestPolicyStep:
    def test_down_window_expiry_drops_a_card(self):
        state = SimState(ChainState.down(3, POLICY.listen_down))
        low = 0.1  # chassis load fraction, below (i-1)/L = 0.5
        nxt = policy_step(state, low, POLICY, CFG)
        assert nxt.current == ChainState.active(2)
        assert nxt.cycle_index == state.cycle_index + 1

    def test_up_reset_when_load_drops(self):
        state = SimState(ChainState.up(2, 1))
        ok = 0.5  # exactly i/L for i=2: within capacity, resets the window
        assert policy_step(state, ok, POLICY, CFG).current == ChainState.active(2)

    def test_no_down_chain_at_one_card(self):
        state = SimState(ChainState.active(1))
        assert policy_step(state, 0.0, POLICY, CFG).current == ChainState.active(1)

    def test_matches_matrix_support(self):
        # loads drawn from the chain's own arrival model: counts beyond
        # double-precision Poisson support are structural zeros
        lam = 1e6
        matrix = build_transition_matrix(CFG, POLICY, lam)
        rng = np.random.default_rng(17)
        chassis_bits = CFG.line_cards * CFG.cycle_bits_per_card
        for _ in range(300):
            state = matrix.states[rng.integers(len(matrix.states))]
            packets = int(rng.poisson(lam * T))
            load = packets * CFG.packet_bits / chassis_bits
            succ = policy_step(SimState(state), load, POLICY, CFG).current
            assert matrix.prob(state, succ) > 0.0


class TestKernelEquivalence:
    """The compiled kernels must match the pure reference bit for bit."""

    def _args(self, seed, cycles=4000):
        rng = np.random.default_rng(seed)
        counts = rng.poisson(2500, cycles).astype(np.int64)
        totals = counts * rng.integers(64, 1519, size=cycles)
        idx = state_index(build_state_space(4, 3, 2))
        return (
            counts,
            totals,
            4,
            3,
            2,
            CFG.cycle_bits_per_card,
            int(CFG.cycle_bits_per_card / 8),
            idx[ChainState.active(4)],
            10**12,
        )

    @pytest.mark.skipif(_speed is None, reason="compiled kernels unavailable")
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_simulate_cycles_identical(self, seed):
        args = self._args(seed)
        pure = _pure.simulate_cycles(*args)
        fast = _speed.simulate_cycles(*args)
        for a, b in zip(pure, fast):
            if isinstance(a, np.ndarray):
                assert np.array_equal(a, b)
            else:
                assert a == b

    @pytest.mark.skipif(_speed is None, reason="compiled kernels unavailable")
    def test_chain_walk_identical(self):
        matrix = build_transition_matrix(CFG, POLICY, 2e6)
        cum = np.cumsum(matrix.probabilities, axis=1)
        uniforms = np.random.default_rng(3).random(100_000)
        pure = _pure.chain_walk(cum, uniforms, 3)
        fast = _speed.chain_walk(cum, uniforms, 3)
        assert np.array_equal(pure, fast)

    def test_next_id_matches_shared_rule_exhaustively(self):
        """Kernel id arithmetic equals markov.next_state over every
        (state, band) combination for several chassis shapes."""
        for L, M, N in [(1, 1, 1), (2, 1, 3), (4, 2, 2), (5, 3, 1)]:
            cfg = ChassisConfig(
                line_cards=L, onus_per_segment=(8,) * L
            )
            policy = SleepPolicy(M, N)
            states = build_state_space(L, M, N)
            idx = state_index(states)
            per_card = cfg.cycle_bits_per_card
            for state in states:
                probes = [
                    (state.level - 1) * per_card - 1.0,  # below
                    (state.level - 0.5) * per_card,  # stay
                    state.level * per_card + 1.0,  # above
                ]
                for bits in probes:
                    if bits < 0:
                        continue
                    expected = next_state(state, bits, cfg, policy)
                    got = _pure._next_id(idx[state], bits, L, M, N, per_card)
                    assert got == idx[expected], (state, bits)
