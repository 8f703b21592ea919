"""Chassis description and closed-form line-card power/saving formulas.

All rates are bits per second, times in seconds, powers in watts. Gb/s
figures at the interfaces are decimal (10 Gb/s = 10e9 b/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

GBPS = 1e9

#: Mean packet length used to turn byte volumes into packet counts when no
#: explicit lengths exist (uniform 64..1518 B).
MEAN_PACKET_BYTES = (64 + 1518) / 2


@dataclass(frozen=True)
class ChassisConfig:
    """Static description of an OLT chassis.

    ``packet_bits`` is the fixed packet size the per-cycle arrival model
    uses; the default 10_000 bits makes the per-cycle capacity thresholds
    integral packet counts for a 10 Gb/s card and 2 ms cycle.
    """

    line_cards: int = 4
    upstream_capacity: float = 10 * GBPS
    downstream_capacity: float = 10 * GBPS
    cycle_length: float = 2e-3
    onus_per_segment: tuple[int, ...] = ()
    card_power: float = 5.0
    switch_power: float = 0.0
    electrical_part_power: float = 5.0
    packet_bits: float = 10_000.0

    def __post_init__(self):
        if self.line_cards < 1:
            raise ValueError("line_cards must be >= 1")
        if self.upstream_capacity <= 0 or self.downstream_capacity <= 0:
            raise ValueError("card capacities must be > 0")
        if self.cycle_length <= 0:
            raise ValueError("cycle_length must be > 0")
        if self.packet_bits <= 0:
            raise ValueError("packet_bits must be > 0")
        if self.card_power < 0 or self.switch_power < 0:
            raise ValueError("powers must be >= 0")
        if not 0 <= self.electrical_part_power <= self.card_power:
            raise ValueError("electrical_part_power must lie in [0, card_power]")
        if not self.onus_per_segment:
            object.__setattr__(self, "onus_per_segment", (32,) * self.line_cards)
        else:
            object.__setattr__(self, "onus_per_segment", tuple(self.onus_per_segment))
        if len(self.onus_per_segment) != self.line_cards:
            raise ValueError("onus_per_segment must have one entry per line card")
        if any(n < 1 for n in self.onus_per_segment):
            raise ValueError("each segment must serve at least one ONU")

    @property
    def cycle_bits_per_card(self) -> float:
        """Downstream bits one card can move in one scheduling cycle."""
        return self.downstream_capacity * self.cycle_length

    @property
    def cycle_packets_per_card(self) -> float:
        """Per-cycle packet capacity of one card under the fixed packet size."""
        return self.cycle_bits_per_card / self.packet_bits


@dataclass(frozen=True)
class SleepPolicy:
    """Hysteresis windows: M cycles before dropping a card, N before adding."""

    listen_down: int = 2
    listen_up: int = 2

    def __post_init__(self):
        if self.listen_down < 1 or self.listen_up < 1:
            raise ValueError("listen windows must be >= 1 cycle")


@dataclass(frozen=True)
class TrafficSnapshot:
    """Instantaneous per-ONU rates, one inner sequence per PON segment."""

    upstream_rates: tuple[tuple[float, ...], ...]
    downstream_rates: tuple[tuple[float, ...], ...]
    time: float = 0.0

    def __post_init__(self):
        up = tuple(tuple(seg) for seg in self.upstream_rates)
        down = tuple(tuple(seg) for seg in self.downstream_rates)
        object.__setattr__(self, "upstream_rates", up)
        object.__setattr__(self, "downstream_rates", down)
        for seg in up + down:
            if any(r < 0 for r in seg):
                raise ValueError("traffic rates must be >= 0")

    @property
    def total_upstream(self) -> float:
        return sum(sum(seg) for seg in self.upstream_rates)

    @property
    def total_downstream(self) -> float:
        return sum(sum(seg) for seg in self.downstream_rates)


def validate_snapshot(snapshot: TrafficSnapshot, config: ChassisConfig) -> None:
    """Reject snapshots that exceed any segment's fiber capacity."""
    if len(snapshot.upstream_rates) != config.line_cards:
        raise ValueError("snapshot must carry one upstream segment per line card")
    if len(snapshot.downstream_rates) != config.line_cards:
        raise ValueError("snapshot must carry one downstream segment per line card")
    for j, seg in enumerate(snapshot.upstream_rates):
        if sum(seg) > config.upstream_capacity * (1 + 1e-12):
            raise ValueError(f"upstream traffic of segment {j} exceeds card capacity")
    for j, seg in enumerate(snapshot.downstream_rates):
        if sum(seg) > config.downstream_capacity * (1 + 1e-12):
            raise ValueError(f"downstream traffic of segment {j} exceeds card capacity")


def required_line_cards(snapshot: TrafficSnapshot, config: ChassisConfig) -> int:
    """Smallest number of cards that carries the snapshot's aggregate traffic.

    Clamped to at least 1: one card always stays on so ONUs keep their
    registration even with zero offered traffic.
    """
    validate_snapshot(snapshot, config)
    need_up = math.ceil(snapshot.total_upstream / config.upstream_capacity)
    need_down = math.ceil(snapshot.total_downstream / config.downstream_capacity)
    return min(config.line_cards, max(1, need_up, need_down))


def chassis_load(snapshot: TrafficSnapshot, config: ChassisConfig) -> float:
    """Chassis utilization: max of the upstream and downstream aggregate loads."""
    validate_snapshot(snapshot, config)
    up = snapshot.total_upstream / (config.upstream_capacity * config.line_cards)
    down = snapshot.total_downstream / (config.downstream_capacity * config.line_cards)
    return max(up, down)


def relative_saving(active: int, config: ChassisConfig) -> float:
    """Instantaneous saving of running ``active`` cards instead of all L."""
    _check_active(active, config)
    return 1.0 - active / config.line_cards


def average_saving(
    active_series: Sequence[tuple[int, float]], config: ChassisConfig
) -> float:
    """Duration-weighted mean of the instantaneous saving 1 - l/L."""
    if not active_series:
        raise ValueError("active_series must not be empty")
    total = 0.0
    weighted = 0.0
    for active, duration in active_series:
        _check_active(active, config)
        if duration <= 0:
            raise ValueError("durations must be > 0")
        total += duration
        weighted += duration * (1.0 - active / config.line_cards)
    return weighted / total


def saving_with_switch_power(mean_active: float, config: ChassisConfig) -> float:
    """Saving once the switch fabric's own draw is charged against it.

    May be negative when the fabric consumes more than the sleeping cards
    would have.
    """
    if not 1 <= mean_active <= config.line_cards:
        raise ValueError("mean_active must lie in [1, line_cards]")
    total = config.card_power * config.line_cards
    return 1.0 - (config.card_power * mean_active + config.switch_power) / total


def max_viable_mean_active(config: ChassisConfig) -> float:
    """Break-even mean card count: above it the switch fabric costs net energy."""
    return config.line_cards - config.switch_power / config.card_power


def switch_power_viable(config: ChassisConfig, mean_active: float) -> bool:
    """True when the fabric draw stays below the power the sleeping cards free up."""
    return config.switch_power < (config.line_cards - mean_active) * config.card_power


def electrical_saving(active: int, config: ChassisConfig) -> float:
    """Saving with an electrical aggregation switch: only the electrical part
    of a card can be powered off, the optics stay on."""
    _check_active(active, config)
    denom = config.line_cards * config.card_power
    return 1.0 - active * config.electrical_part_power / denom


def _check_active(active: int, config: ChassisConfig) -> None:
    if not 1 <= active <= config.line_cards:
        raise ValueError(f"active card count {active} outside [1, {config.line_cards}]")
