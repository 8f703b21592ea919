"""Switch fabrics between PON segments and line cards: topology, power,
segment-to-card mappings, and reconfiguration-time compliance."""

from __future__ import annotations

import math
from dataclasses import dataclass

SINGLE_NXN = "single-nxn"
CASCADED_2X2 = "cascaded-2x2"
TOPOLOGIES = (SINGLE_NXN, CASCADED_2X2)

EPON_MAX_RECONFIG_S = 50e-3
GPON_MAX_RECONFIG_S = 125e-6


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class SwitchFabric:
    """A single N x N switch, or log2(P) stages of 2x2 elements."""

    topology: str = SINGLE_NXN
    ports: int = 4
    per_element_power: float = 0.2
    reconfig_time: float = 5e-3

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.ports < 1:
            raise ValueError("ports must be >= 1")
        if self.topology == CASCADED_2X2 and not _is_power_of_two(self.ports):
            raise ValueError("cascaded 2x2 fabrics need a power-of-two port count")
        if self.per_element_power < 0:
            raise ValueError("per_element_power must be >= 0")
        if self.reconfig_time <= 0:
            raise ValueError("reconfig_time must be > 0")

    @property
    def element_count(self) -> int:
        if self.topology == SINGLE_NXN:
            return 1
        return self.ports - 1

    @property
    def stage_count(self) -> int:
        if self.topology == SINGLE_NXN:
            return 1
        return int(math.log2(self.ports))

    def elements_in_stage(self, stage: int) -> int:
        """Elements in the given 1-based stage of a cascaded fabric."""
        if not 1 <= stage <= self.stage_count:
            raise ValueError(f"stage {stage} outside 1..{self.stage_count}")
        if self.topology == SINGLE_NXN:
            return 1
        return 2 ** (stage - 1)

    @property
    def total_power(self) -> float:
        return self.element_count * self.per_element_power


@dataclass(frozen=True)
class SegmentMapping:
    """Assignment of every PON segment to one powered line card."""

    assignment: tuple[int, ...]
    active_cards: int

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(self.assignment))
        if self.active_cards < 1:
            raise ValueError("at least one card must stay powered")
        if any(not 0 <= card < self.active_cards for card in self.assignment):
            raise ValueError("segments must map to powered cards only")

    @property
    def segments(self) -> int:
        return len(self.assignment)


def nxn_mapping(load: float, line_cards: int) -> SegmentMapping:
    """Mapping behind a single N x N switch: the minimal card count for the
    load, segments spread round-robin."""
    if not 0.0 <= load <= 1.0:
        raise ValueError("load must lie in [0, 1]")
    if line_cards < 1:
        raise ValueError("line_cards must be >= 1")
    active = max(1, math.ceil(load * line_cards))
    return SegmentMapping(
        tuple(seg % active for seg in range(line_cards)), active
    )


def nxn_saving(load: float, line_cards: int) -> float:
    """Card-count saving fraction behind a single N x N switch."""
    return 1.0 - nxn_mapping(load, line_cards).active_cards / line_cards


def cascaded_mapping(load: float, line_cards: int) -> SegmentMapping:
    """Mapping behind cascaded 2x2 switches: contiguous power-of-two blocks
    of segments share one card, so card counts only halve or double."""
    if not _is_power_of_two(line_cards):
        raise ValueError("cascaded mapping needs a power-of-two card count")
    if not 0.0 < load <= 1.0:
        raise ValueError("load must lie in (0, 1]; a zero load keeps one card on")
    k = min(int(math.floor(math.log2(1.0 / load))), int(math.log2(line_cards)))
    active = max(1, line_cards >> k)
    group = line_cards // active
    return SegmentMapping(
        tuple(seg // group for seg in range(line_cards)), active
    )


def cascaded_saving(load: float, line_cards: int | None = None) -> float:
    """Energy-saving fraction of the cascaded fabric: the power-on share of
    cards is 1/2^k with k = floor(log2(1/load)), floored at one card when
    the chassis size is given."""
    if not 0.0 < load <= 1.0:
        raise ValueError("load must lie in (0, 1]")
    fraction = 2.0 ** -math.floor(math.log2(1.0 / load))
    if line_cards is not None:
        fraction = max(fraction, 1.0 / line_cards)
    return 1.0 - fraction


def reconfig_compliant(fabric: SwitchFabric, pon: str) -> bool:
    """Whether reconfiguration fits inside the PON flavor's control cadence
    (EPON keepalive grants every 50 ms; GPON frames every 125 us)."""
    kind = pon.lower()
    if kind == "epon":
        return fabric.reconfig_time <= EPON_MAX_RECONFIG_S
    if kind == "gpon":
        return fabric.reconfig_time <= GPON_MAX_RECONFIG_S
    raise ValueError(f"unknown PON flavor {pon!r}")
