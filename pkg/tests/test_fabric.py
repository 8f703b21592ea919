import math

import pytest

from greenolt.fabric import (
    CASCADED_2X2,
    SINGLE_NXN,
    SegmentMapping,
    SwitchFabric,
    cascaded_mapping,
    cascaded_saving,
    nxn_mapping,
    nxn_saving,
    reconfig_compliant,
)


class TestFabricCounts:
    @pytest.mark.parametrize("ports", [2, 4, 8, 16])
    def test_cascaded_stage_and_element_counts(self, ports):
        fabric = SwitchFabric(topology=CASCADED_2X2, ports=ports)
        assert fabric.stage_count == int(math.log2(ports))
        assert fabric.element_count == ports - 1

    @pytest.mark.parametrize("ports", [2, 4, 8, 16])
    def test_stage_k_holds_2_to_k_minus_1_elements(self, ports):
        fabric = SwitchFabric(topology=CASCADED_2X2, ports=ports)
        per_stage = [fabric.elements_in_stage(k) for k in range(1, fabric.stage_count + 1)]
        assert per_stage == [2 ** (k - 1) for k in range(1, fabric.stage_count + 1)]
        assert sum(per_stage) == fabric.element_count

    def test_single_switch_is_one_element(self):
        fabric = SwitchFabric(topology=SINGLE_NXN, ports=4, per_element_power=0.2)
        assert fabric.element_count == 1
        assert fabric.total_power == pytest.approx(0.2)

    def test_cascaded_power_sums_elements(self):
        fabric = SwitchFabric(topology=CASCADED_2X2, ports=8, per_element_power=0.2)
        assert fabric.total_power == pytest.approx(7 * 0.2)

    def test_cascaded_needs_power_of_two_ports(self):
        with pytest.raises(ValueError):
            SwitchFabric(topology=CASCADED_2X2, ports=6)

    def test_unknown_topology_rejected(self):
        with pytest.raises(ValueError):
            SwitchFabric(topology="crossbar")


class TestNxnMapping:
    def test_load_bands_for_four_cards(self):
        assert nxn_mapping(0.6, 4).active_cards == 3  # (50%, 75%]
        assert nxn_mapping(0.75, 4).active_cards == 3  # closed upper boundary
        assert nxn_mapping(0.2, 4).active_cards == 1  # (0, 25%]
        assert nxn_mapping(1.0, 4).active_cards == 4

    def test_zero_load_keeps_one_card(self):
        assert nxn_mapping(0.0, 4).active_cards == 1

    def test_card_count_non_decreasing_in_load(self):
        loads = [i / 100 for i in range(101)]
        counts = [nxn_mapping(x, 4).active_cards for x in loads]
        assert all(a <= b for a, b in zip(counts, counts[1:]))

    def test_every_segment_is_assigned(self):
        mapping = nxn_mapping(0.6, 4)
        assert mapping.segments == 4
        assert set(mapping.assignment) == set(range(mapping.active_cards))

    def test_round_robin_balance(self):
        mapping = nxn_mapping(0.3, 8)  # 3 cards for 8 segments
        percard = [mapping.assignment.count(c) for c in range(mapping.active_cards)]
        assert max(percard) - min(percard) <= 1

    def test_rejects_out_of_range_load(self):
        with pytest.raises(ValueError):
            nxn_mapping(1.2, 4)
        with pytest.raises(ValueError):
            nxn_mapping(-0.1, 4)


class TestCascadedMapping:
    def test_two_cards_at_30_percent_load(self):
        mapping = cascaded_mapping(0.3, 4)
        assert mapping.active_cards == 2
        assert cascaded_saving(0.3) == pytest.approx(0.5)

    def test_above_half_load_keeps_everything_on(self):
        assert cascaded_mapping(0.6, 4).active_cards == 4
        assert cascaded_saving(0.6) == pytest.approx(0.0)

    def test_low_load_floors_at_one_card(self):
        mapping = cascaded_mapping(0.2, 4)
        assert mapping.active_cards == 1
        assert cascaded_saving(0.2, line_cards=4) == pytest.approx(0.75)

    def test_saving_at_full_load_is_zero(self):
        assert cascaded_saving(1.0) == pytest.approx(0.0)

    def test_groups_are_contiguous_power_of_two_blocks(self):
        for load in (0.1, 0.3, 0.45, 0.7, 1.0):
            mapping = cascaded_mapping(load, 8)
            group = 8 // mapping.active_cards
            assert group & (group - 1) == 0  # power of two
            expected = tuple(seg // group for seg in range(8))
            assert mapping.assignment == expected

    def test_zero_load_rejected(self):
        with pytest.raises(ValueError):
            cascaded_mapping(0.0, 4)
        with pytest.raises(ValueError):
            cascaded_saving(0.0)

    def test_non_power_of_two_chassis_rejected(self):
        with pytest.raises(ValueError):
            cascaded_mapping(0.5, 6)

    def test_cascaded_never_beats_nxn(self):
        for i in range(1, 20):
            load = i / 20
            assert cascaded_saving(load, line_cards=4) <= nxn_saving(load, 4) + 1e-12
            casc = cascaded_mapping(load, 4).active_cards
            assert casc >= nxn_mapping(load, 4).active_cards


class TestSegmentMapping:
    def test_rejects_unpowered_targets(self):
        with pytest.raises(ValueError):
            SegmentMapping(assignment=(0, 2), active_cards=2)

    def test_rejects_zero_cards(self):
        with pytest.raises(ValueError):
            SegmentMapping(assignment=(0,), active_cards=0)


class TestCompliance:
    def test_opto_mechanical_against_epon_and_gpon(self):
        opto = SwitchFabric(reconfig_time=5e-3)
        assert reconfig_compliant(opto, "EPON") is True
        assert reconfig_compliant(opto, "GPON") is False

    def test_fast_switch_meets_gpon_frame(self):
        fast = SwitchFabric(reconfig_time=100e-6)
        assert reconfig_compliant(fast, "GPON") is True

    def test_boundaries_are_inclusive(self):
        assert reconfig_compliant(SwitchFabric(reconfig_time=50e-3), "epon") is True
        assert reconfig_compliant(SwitchFabric(reconfig_time=125e-6), "gpon") is True
        assert reconfig_compliant(SwitchFabric(reconfig_time=50.001e-3), "epon") is False

    def test_unknown_pon_flavor_rejected(self):
        with pytest.raises(ValueError):
            reconfig_compliant(SwitchFabric(), "xgs-pon")
