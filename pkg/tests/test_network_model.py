"""
Test cases for the network and traffic models
"""

import unittest
import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from src.data.scenario_generator import ScenarioGenerator
from src.models.network import Link, Node, NodeKind, TimeConfig, build_graph, ceil_div, epoch_offset
from src.models.schedule import Route
from src.models.traffic import (Application, check_application, draw_phases, fragment, key_from_str, key_to_str,
                                messages)
from src.utils.errors import ConfigurationError, RouteError
from tests.helpers import CHAIN, chain_graph


class TestTimeConfig(unittest.TestCase):
    def test_from_cycle_time(self):
        """Test derivation of n_dip and the hypercycle"""
        time = TimeConfig.from_cycle_time(50_000, 10_000)
        self.assertEqual(time.n_dip, 5)
        self.assertEqual(time.t_hc, 50_000)

    def test_cycle_time_not_multiple_of_dip_cycle(self):
        """Test that t_ct must be a whole number of DIP cycles"""
        with self.assertRaises(ConfigurationError):
            TimeConfig.from_cycle_time(45_000, 10_000)

    def test_inconsistent_fields(self):
        """Test that t_hc must equal t_ct and n_dip * t_dip"""
        with self.assertRaises(ConfigurationError):
            TimeConfig(t_ct=40_000, t_dip=10_000, n_dip=4, t_hc=80_000)
        with self.assertRaises(ConfigurationError):
            TimeConfig(t_ct=40_000, t_dip=10_000, n_dip=3, t_hc=40_000)
        with self.assertRaises(ConfigurationError):
            TimeConfig(t_ct=0, t_dip=10_000, n_dip=0, t_hc=0)


class TestGraph(unittest.TestCase):
    def setUp(self):
        self.time = TimeConfig.from_cycle_time(40_000, 10_000)

    def test_duplicate_node(self):
        """Test that node ids must be unique"""
        nodes = [Node('a', NodeKind.SOURCE_HOST), Node('a', NodeKind.DEST_HOST)]
        with self.assertRaises(ConfigurationError):
            build_graph(nodes, [], self.time)

    def test_dangling_endpoint(self):
        """Test that links must connect known nodes"""
        nodes = [Node('a', NodeKind.SOURCE_HOST)]
        with self.assertRaises(ConfigurationError):
            build_graph(nodes, [Link('a', 'b', 10 ** 9, 0)], self.time)

    def test_dip_link_needs_two_queues(self):
        """Test that links leaving DIP routers need at least two queues"""
        nodes = [Node('a', NodeKind.DIP_ROUTER), Node('b', NodeKind.DIP_ROUTER)]
        with self.assertRaises(ConfigurationError):
            build_graph(nodes, [Link('a', 'b', 10 ** 9, 0, queues=1)], self.time)

    def test_epoch_range(self):
        """Test that epochs must lie within one hypercycle"""
        with self.assertRaises(ConfigurationError):
            build_graph([Node('a', NodeKind.SOURCE_HOST, 40_000)], [], self.time)

    def test_epoch_offset_is_normalized(self):
        """Test the epoch offset of a link in both directions"""
        graph = chain_graph(epochs={'TA': 30_000, 'DA': 10_000})
        self.assertEqual(epoch_offset(graph.link('TA', 'DA'), graph), 20_000)
        self.assertEqual(epoch_offset(graph.link('S', 'TA'), graph), 10_000)
        self.assertEqual(epoch_offset(graph.link('DA', 'DB'), graph), 10_000)

    def test_worked_example_offsets(self):
        """Test the epoch offsets of the worked example"""
        graph = ScenarioGenerator().worked_example().graph
        self.assertEqual(graph.offset(graph.link('v0', 'v1')), 0)
        self.assertEqual(graph.offset(graph.link('v1', 'v2')), 20_000)
        self.assertEqual(graph.offset(graph.link('v2', 'v3')), 0)

    def test_tx_time_rounds_up(self):
        """Test transmission times in integer nanoseconds"""
        self.assertEqual(Link('a', 'b', 10 ** 9, 0).tx_time(1500), 12_000)
        self.assertEqual(Link('a', 'b', 10 * 10 ** 9, 0).tx_time(1500), 1_200)
        self.assertEqual(Link('a', 'b', 3, 0).tx_time(1), ceil_div(8 * 10 ** 9, 3))

    def test_ceil_div_negative(self):
        self.assertEqual(ceil_div(-5, 10), 0)
        self.assertEqual(ceil_div(-15, 10), -1)
        self.assertEqual(ceil_div(15, 10), 2)


class TestRouteStructure(unittest.TestCase):
    def setUp(self):
        self.graph = chain_graph()

    def test_indices_and_segments(self):
        """Test the derived indices and the per-domain link helpers"""
        route = Route.from_nodes(CHAIN, self.graph)
        self.assertEqual((route.k, route.m, route.n), (1, 3, 5))
        self.assertEqual([l.key for l in route.tas_ingress_links(self.graph)], [('S', 'TA'), ('TA', 'DA')])
        self.assertEqual([l.key for l in route.dip_links(self.graph)], [('DA', 'DB'), ('DB', 'TB')])
        self.assertEqual([l.key for l in route.egress_tas_links(self.graph)], [('TB', 'R')])
        self.assertEqual(route.dip_nodes, ('DA', 'DB'))

    def test_missing_link(self):
        """Test that a route must follow existing links"""
        with self.assertRaises(RouteError):
            Route.from_nodes(['S', 'DA', 'DB', 'TB', 'R'], self.graph)

    def test_repeated_node(self):
        with self.assertRaises(RouteError):
            Route.from_nodes(['S', 'TA', 'DA', 'DB', 'DA', 'R'], self.graph)


class TestTraffic(unittest.TestCase):
    def setUp(self):
        self.time = TimeConfig.from_cycle_time(40_000, 10_000)
        self.graph = chain_graph()

    def test_fragment_sizes(self):
        """Test that messages split into MTU-sized packets with a short tail"""
        app = Application('a', 'S', 'R', e2e=10 ** 6, msg_len=3100, period=40_000)
        lengths = [p.length for p in fragment(app, self.time)]
        self.assertEqual(lengths, [1500, 1500, 100])

    def test_message_offsets(self):
        """Test that messages arrive one period apart, wrapped into the cycle time"""
        app = Application('a', 'S', 'R', e2e=10 ** 6, msg_len=100, period=20_000, phase=30_000 % 20_000)
        offsets = [m.arrival_offset for m in messages(app, self.time)]
        self.assertEqual(offsets, [10_000, 30_000])
        packets = fragment(app, self.time)
        self.assertEqual([p.key for p in packets], [('a', 1, 1), ('a', 2, 1)])

    def test_period_must_divide_cycle_time(self):
        """Test rejection of periods that do not divide t_ct"""
        app = Application('a', 'S', 'R', e2e=10 ** 6, msg_len=100, period=30_000)
        with self.assertRaises(ConfigurationError):
            check_application(app, self.graph)

    def test_endpoints_must_be_hosts(self):
        app = Application('a', 'TA', 'R', e2e=10 ** 6, msg_len=100, period=40_000)
        with self.assertRaises(ConfigurationError):
            check_application(app, self.graph)

    def test_phases_are_reproducible(self):
        """Test that the same seed draws the same phases"""
        apps = [Application(f"a{i}", 'S', 'R', 10 ** 6, 100, 20_000) for i in range(5)]
        first = draw_phases(apps, self.time, 7)
        second = draw_phases(apps, self.time, 7)
        self.assertEqual([a.phase for a in first], [a.phase for a in second])
        self.assertTrue(all(0 <= a.phase < a.period for a in first))

    def test_packet_keys(self):
        """Test that application ids may contain colons and malformed keys are refused"""
        self.assertEqual(key_from_str(key_to_str(('a:b', 2, 3))), ('a:b', 2, 3))
        for text in ('tau-1-1', 'tau:x:1', ''):
            with self.assertRaises(ConfigurationError):
                key_from_str(text)


if __name__ == '__main__':
    unittest.main()
