"""
Test cases for the TAS/DIP cycle and offset mapping
"""

import unittest
import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from src.data.scenario_generator import ScenarioGenerator
from src.engine.cycle_map import (
    ScheduleEntry, packet_e2e_delay, packet_timeline, route_cycles, tas_offsets,
    theta_dip_to_tas, theta_tas_to_dip, vartheta_dip_to_dip,
)
from src.models.network import Link, TimeConfig
from src.models.schedule import Route
from src.models.traffic import fragment, message_offset
from src.utils.errors import CycleMapError, UnboundVariableError

GBPS = 1_000_000_000


class TestMappingFunctions(unittest.TestCase):
    def setUp(self):
        self.t_dip = 10_000
        self.domains = [TimeConfig.from_cycle_time(n * self.t_dip, self.t_dip) for n in range(2, 17)]
        self.delays = [0, 1_500, 10_000, 25_000, 37_000]

    def test_dip_to_dip_range_and_wrap(self):
        """Test that every cycle maps into [0, n_dip) and the last cycle wraps"""
        for time in self.domains:
            for d in self.delays:
                link = Link('a', 'b', GBPS, d)
                for c in range(time.n_dip):
                    y = vartheta_dip_to_dip(c, link, time)
                    self.assertTrue(0 <= y < time.n_dip)
                    self.assertEqual(y, (c + 1 + -(-d // self.t_dip)) % time.n_dip)

    def test_next_cycle_rule(self):
        """Test that zero delay and zero offset forward in the next cycle"""
        for time in self.domains:
            link = Link('a', 'b', GBPS, 0)
            for c in range(time.n_dip):
                self.assertEqual(vartheta_dip_to_dip(c, link, time), (c + 1) % time.n_dip)
            self.assertEqual(vartheta_dip_to_dip(time.n_dip - 1, link, time), 0)

    def test_dip_to_tas_range(self):
        """Test that arrival offsets at the TAS edge stay within the cycle time"""
        for time in self.domains:
            for d in self.delays:
                link = Link('a', 'b', GBPS, d)
                for c in range(time.n_dip):
                    for delta in (0, self.t_dip // 2, time.t_hc - 1):
                        offset = theta_dip_to_tas(c, link, time, delta)
                        self.assertTrue(0 <= offset < time.t_ct)
                        self.assertEqual(offset, ((c + 1) * self.t_dip + d + delta) % time.t_ct)

    def test_cycle_out_of_range(self):
        time = self.domains[0]
        link = Link('a', 'b', GBPS, 0)
        with self.assertRaises(CycleMapError):
            vartheta_dip_to_dip(time.n_dip, link, time)
        with self.assertRaises(CycleMapError):
            theta_dip_to_tas(-1, link, time)

    def test_tas_to_dip_monotone_in_shift(self):
        """Test that every extra cycle of shift moves the packet by exactly one cycle"""
        for time in self.domains:
            for queues in range(2, 9):
                nxt = Link('b', 'c', GBPS, 0, queues)
                link = Link('a', 'b', GBPS, 1_500)
                tx = link.tx_time(100)
                for phi in range(0, time.t_ct - tx + 1, 2_500):
                    previous = None
                    for r in range(queues - 1):
                        c = theta_tas_to_dip(phi, tx, link, r, time, next_link=nxt)
                        self.assertTrue(0 <= c < time.n_dip)
                        if previous is not None:
                            self.assertEqual((c - previous) % time.n_dip, 1)
                        previous = c

    def test_shift_outside_queue_range(self):
        """Test that r may not exceed q - 2 of the next link"""
        time = self.domains[3]
        link = Link('a', 'b', GBPS, 0)
        with self.assertRaises(CycleMapError):
            theta_tas_to_dip(0, 800, link, 3, time, next_link=Link('b', 'c', GBPS, 0, queues=4))
        with self.assertRaises(CycleMapError):
            theta_tas_to_dip(0, 800, link, -1, time)

    def test_offset_outside_window(self):
        """Test that the offset must leave room for the transmission"""
        time = self.domains[3]
        link = Link('a', 'b', GBPS, 0)
        with self.assertRaises(CycleMapError):
            theta_tas_to_dip(time.t_ct - 799, 800, link, 0, time)

    def test_late_packet_shifted_to_cycle_four(self):
        """Test a packet ready in cycle 3 that is shifted by one more cycle"""
        time = TimeConfig.from_cycle_time(50_000, 10_000)
        link = Link('a', 'b', GBPS, 1_500)
        self.assertEqual(theta_tas_to_dip(10_000, 12_000, link, 1, time, delta=0), 4)
        self.assertEqual(theta_tas_to_dip(10_000, 12_000, link, 0, time, delta=0), 3)


class TestWorkedExample(unittest.TestCase):
    def setUp(self):
        scenario = ScenarioGenerator().worked_example()
        self.graph = scenario.graph
        self.app = scenario.apps[0]
        self.route = Route.from_nodes(['v0', 'v1', 'v2', 'v3', 'v4', 'v5'], self.graph)
        self.packets = fragment(self.app, self.graph.time)
        self.entries = [ScheduleEntry(0, 1, 0), ScheduleEntry(12_000, 0, 12_000)]

    def timeline(self, index):
        packet = self.packets[index]
        return packet_timeline(packet, self.route, self.entries[index], self.graph,
                               message_offset(self.app, packet.msg_index, self.graph.time))

    def test_ingress_offsets(self):
        """Test the offsets on the ingress access network"""
        first, second = self.timeline(0), self.timeline(1)
        self.assertEqual(first.offsets['v1'], 13_500)
        self.assertEqual(second.offsets['v1'], 25_500)
        self.assertEqual(tas_offsets(self.packets[1], self.route, 12_000, self.graph)['v1'], 25_500)

    def test_core_cycles(self):
        """Test that both packets use cycle 1 at v2 and cycle 0 at v3"""
        for index in range(2):
            self.assertEqual(self.timeline(index).cycle_indices(self.graph.time.n_dip), [1, 0])
            packet = self.packets[index].with_offsets(self.timeline(index).offsets)
            self.assertEqual(route_cycles(packet, self.route, self.entries[index].r, self.graph), [1, 0])

    def test_egress_release(self):
        """Test the departure times at the egress TAS edge switch"""
        first, second = self.timeline(0), self.timeline(1)
        self.assertEqual(first.departures['v4'], 111_500)
        self.assertEqual(second.departures['v4'], 123_500)
        self.assertEqual(first.offsets['v4'], 11_500)
        self.assertEqual(second.offsets['v4'], 23_500)

    def test_delays(self):
        """Test packet delays from the closed form and from the timeline"""
        for index, expected in enumerate([105_000, 117_000]):
            packet = self.packets[index]
            offset = message_offset(self.app, packet.msg_index, self.graph.time)
            self.assertEqual(self.timeline(index).delay, expected)
            self.assertEqual(packet_e2e_delay(packet, self.route, self.entries[index], self.graph, offset), expected)

    def test_shift_and_extra_delay_add_up(self):
        """Test that r cycles and the extra delay shift the release one to one"""
        packet = self.packets[0]
        base = packet_timeline(packet, self.route, ScheduleEntry(0, 0, 0), self.graph, 0)
        for r in range(0, 4):
            for extra in (0, 3_000, 12_000):
                shifted = packet_timeline(packet, self.route, ScheduleEntry(0, r, extra), self.graph, 0)
                self.assertEqual(shifted.cycles, [c + r for c in base.cycles])
                self.assertEqual(shifted.delay, base.delay + r * self.graph.time.t_dip + extra)

    def test_unbound_variable(self):
        with self.assertRaises(UnboundVariableError):
            packet_e2e_delay(self.packets[0], self.route, ScheduleEntry(0, None, 0), self.graph, 0)
        with self.assertRaises(UnboundVariableError):
            route_cycles(self.packets[0], self.route, 0, self.graph)


if __name__ == '__main__':
    unittest.main()
