"""Cycle-driven simulator of the line-card sleep-control policy.

Each cycle the chassis serves queued plus fresh traffic with the capacity of
the currently powered cards, buffers the excess FIFO, accounts energy, and
then steps the sleep state machine on the cycle's arrival volume. The state
machine is the exact band rule of the analytic chain, so Poisson runs
converge to the chain's stationary statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels
from .chassis import ChassisConfig, SleepPolicy
from .markov import ChainState, build_state_space, next_state, state_index
from .traffic import TrafficTrace

DEFAULT_BACKLOG_CAP = 10**9  # bytes


class BacklogOverflowError(RuntimeError):
    """Backlog grew past the configured cap: the offered load is unstable."""


@dataclass
class SimState:
    """Mutable per-run view: sleep state plus FIFO backlog in bytes."""

    current: ChainState
    backlog: int = 0
    cycle_index: int = 0


@dataclass(frozen=True)
class SimReport:
    """Aggregate outcome of one simulation run."""

    energy_saving: float
    mean_delay: float
    max_delay: float
    state_occupancy: dict[ChainState, float]
    mean_active_cards: float
    reconfig_events: int
    cycles: int
    served_packets: int
    served_bytes: int
    arrived_bytes: int
    final_backlog: int

    def occupancy_by_label(self) -> dict[str, float]:
        return {s.label: f for s, f in self.state_occupancy.items()}

    def as_dict(self) -> dict:
        out = {
            "energy_saving": self.energy_saving,
            "mean_delay_s": self.mean_delay,
            "max_delay_s": self.max_delay,
            "mean_active_cards": self.mean_active_cards,
            "reconfig_events": self.reconfig_events,
            "cycles": self.cycles,
            "served_packets": self.served_packets,
            "served_bytes": self.served_bytes,
            "arrived_bytes": self.arrived_bytes,
            "final_backlog_bytes": self.final_backlog,
            "state_occupancy": self.occupancy_by_label(),
        }
        return out


def policy_step(
    state: SimState,
    observed_cycle_load: float,
    policy: SleepPolicy,
    config: ChassisConfig,
) -> SimState:
    """Advance the sleep state machine by one cycle.

    ``observed_cycle_load`` is the cycle's arrival volume as a fraction of
    the whole chassis capacity; the buffer never feeds back into it.
    """
    volume_bits = observed_cycle_load * config.line_cards * config.cycle_bits_per_card
    succ = next_state(state.current, volume_bits, config, policy)
    return SimState(succ, state.backlog, state.cycle_index + 1)


def simulate(
    config: ChassisConfig,
    policy: SleepPolicy,
    trace: TrafficTrace,
    backlog_cap: int = DEFAULT_BACKLOG_CAP,
    initial_state: ChainState | None = None,
    upstream_trace: TrafficTrace | None = None,
) -> SimReport:
    """Run the sleep policy over a whole trace and report energy and delay.

    The chassis boots fully on. Served bytes plus the final backlog equal
    the arrived bytes exactly (all byte accounting is integral); packet
    delays are whole cycles, so traffic served in its arrival cycle reports
    zero delay.

    ``trace`` is the downstream direction. When ``upstream_trace`` is given
    it is queued and served separately against the upstream card capacity,
    and the policy observes the max of the two directions' loads; service
    metrics are summed over directions.
    """
    if trace.cycles == 0:
        raise ValueError("trace must hold at least one cycle")
    if not math.isclose(trace.cycle_length, config.cycle_length, rel_tol=1e-9):
        raise ValueError(
            f"trace cycle length {trace.cycle_length} does not match "
            f"config cycle length {config.cycle_length}"
        )
    up_kwargs = {}
    arrived = trace.total_bytes
    if upstream_trace is not None:
        if upstream_trace.cycles != trace.cycles:
            raise ValueError("upstream trace must cover the same cycles")
        if not math.isclose(
            upstream_trace.cycle_length, config.cycle_length, rel_tol=1e-9
        ):
            raise ValueError("upstream trace cycle length does not match config")
        up_bits = config.upstream_capacity * config.cycle_length
        up_kwargs = dict(
            up_counts=upstream_trace.packet_counts,
            up_byte_totals=upstream_trace.byte_totals,
            up_cycle_bits_per_card=up_bits,
            up_cap_bytes_per_card=int(up_bits / 8.0),
        )
        arrived += upstream_trace.total_bytes

    L = config.line_cards
    M, N = policy.listen_down, policy.listen_up
    states = build_state_space(L, M, N)
    idx = state_index(states)
    start = ChainState.active(L) if initial_state is None else initial_state
    cap_bytes = int(config.cycle_bits_per_card / 8.0)

    (
        occupancy,
        active_sum,
        served_packets,
        delay_sum,
        max_delay,
        served_bytes,
        final_backlog,
        reconfig,
        status,
    ) = _kernels.simulate_cycles(
        trace.packet_counts,
        trace.byte_totals,
        L,
        M,
        N,
        config.cycle_bits_per_card,
        cap_bytes,
        idx[start],
        int(backlog_cap),
        **up_kwargs,
    )
    if status != 0:
        raise BacklogOverflowError(
            f"backlog exceeded {backlog_cap} bytes; offered load is unstable "
            "for this configuration"
        )

    cycles = trace.cycles
    T = config.cycle_length
    total_power = config.card_power * L
    mean_power = (
        config.card_power * active_sum / cycles + config.switch_power
    )
    return SimReport(
        energy_saving=1.0 - mean_power / total_power,
        mean_delay=(delay_sum / served_packets) * T if served_packets else 0.0,
        max_delay=max_delay * T,
        state_occupancy={s: occupancy[idx[s]] / cycles for s in states},
        mean_active_cards=active_sum / cycles,
        reconfig_events=int(reconfig),
        cycles=cycles,
        served_packets=int(served_packets),
        served_bytes=int(served_bytes),
        arrived_bytes=arrived,
        final_backlog=int(final_backlog),
    )
