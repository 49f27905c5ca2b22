"""
Test cases for the device program compiler
"""

import unittest
import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from src.data.scenario_generator import ScenarioGenerator
from src.engine.device_compiler import (
    DeviceCompiler, GateControlList, compile_all, compile_dip_table, compile_gcl, compile_pifo, gate_string,
)
from src.engine.scheduler import solve
from src.models.network import Link, Node, NodeKind, TimeConfig, build_graph
from src.models.schedule import Route, Schedule, SolverConfig
from src.models.traffic import Application
from src.utils.errors import ConfigurationError, GclCompileError, PifoCompileError
from tests.helpers import chain_graph, example_schedule, hand_schedule

GBPS = 1_000_000_000


class TestGateControlLists(unittest.TestCase):
    def setUp(self):
        scenario = ScenarioGenerator().worked_example()
        self.graph = scenario.graph
        self.app = scenario.apps[0]

    def test_gate_string_orientation(self):
        """Test that the leftmost character is Q1 and the rightmost Q8"""
        self.assertEqual(gate_string(8), 'ccccccco')
        self.assertEqual(gate_string(1), 'occccccc')

    def test_gate_strings_always_name_eight_queues(self):
        """Test full-width gate strings on a port with four queues"""
        graph = chain_graph(queues=4)
        app = Application('narrow', 'S', 'R', e2e=200_000, msg_len=1000, period=graph.time.t_ct, mtu=500)
        schedule = hand_schedule(graph, {'narrow': [(0, 0, 0), (4_000, 0, 0)]})
        gcl = compile_gcl(schedule, graph, 'S', [app])
        self.assertEqual(len(gcl.entries), 2)
        self.assertTrue(all(len(e.gate_states) == 8 for e in gcl.entries))
        self.assertTrue(all(len(states) == 8 for _, states in gcl.expanded()))
        self.assertTrue(all(e.queue <= 4 for e in gcl.entries))
        with self.assertRaises(GclCompileError):
            gate_string(9)
        with self.assertRaises(GclCompileError):
            gate_string(0)

    def test_two_applications_round_robin(self):
        """Test four packets at a source host rotating from Q8 downward"""
        other = Application('tau2', 'v0', 'v5', e2e=200_000, msg_len=3000, period=50_000, phase=0)
        schedule = example_schedule(self.graph)
        route = schedule.routes['tau']
        schedule.admission['tau2'] = True
        schedule.routes['tau2'] = route
        for j, phi in ((1, 24_000), (2, 36_000)):
            key = ('tau2', 1, j)
            schedule.src_offsets[key] = phi
            schedule.cycle_shifts[key] = 0
            schedule.extra_delays[key] = 0
        gcl = compile_gcl(schedule, self.graph, 'v0', [self.app, other])
        self.assertEqual([(e.offset, e.gate_states) for e in gcl.entries],
                         [(0, 'ccccccco'), (12_000, 'ccccccoc'), (24_000, 'cccccocc'), (36_000, 'ccccoccc')])
        self.assertTrue(all(e.duration == 12_000 for e in gcl.entries))

    def test_worked_example_source(self):
        gcl = compile_gcl(example_schedule(self.graph), self.graph, 'v0', [self.app])
        self.assertEqual([(e.offset, e.gate_states) for e in gcl.entries],
                         [(0, 'ccccccco'), (12_000, 'ccccccoc')])
        self.assertEqual(gcl.expanded(), [(0, 'ccccccco'), (12_000, 'ccccccoc'), (24_000, 'cccccccc')])

    def test_single_packet(self):
        """Test one packet at offset 0"""
        app = Application('one', 'v0', 'v5', e2e=200_000, msg_len=1500, period=50_000, phase=0)
        schedule = example_schedule(self.graph)
        schedule.admission = {'one': True}
        schedule.routes = {'one': schedule.routes['tau']}
        schedule.src_offsets = {('one', 1, 1): 0}
        schedule.cycle_shifts = {('one', 1, 1): 0}
        schedule.extra_delays = {('one', 1, 1): 0}
        gcl = compile_gcl(schedule, self.graph, 'v0', [app])
        self.assertEqual([(e.offset, e.gate_states) for e in gcl.entries], [(0, 'ccccccco')])

    def test_empty(self):
        """Test that a node without scheduled packets keeps its gates closed"""
        gcl = compile_gcl(Schedule(), self.graph, 'v0', [self.app])
        self.assertEqual(gcl.entries, [])
        self.assertEqual(gcl.expanded(), [])

    def test_port_required_on_multi_port_node(self):
        graph = ScenarioGenerator().core_graph()
        with self.assertRaises(GclCompileError):
            compile_gcl(Schedule(), graph, 'T0', [])
        with self.assertRaises(ConfigurationError):
            compile_gcl(Schedule(), graph, 'C0', [])

    def test_queue_exhaustion(self):
        """Test that nine packets waiting together need more than eight queues"""
        graph = chain_graph(t_ct=40_000)
        app = Application('burst', 'S', 'R', e2e=200_000, msg_len=900, period=40_000, mtu=100)
        schedule = hand_schedule(graph, {'burst': [(j * 800, 0, 0) for j in range(9)]})
        with self.assertRaises(GclCompileError):
            compile_gcl(schedule, graph, 'S', [app])

    def test_shared_queue_keeps_fifo_order(self):
        """Test that packets arriving apart may reuse a queue"""
        graph = chain_graph(t_ct=40_000)
        app = Application('spread', 'S', 'R', e2e=200_000, msg_len=100, period=4_000)
        schedule = Schedule(admission={'spread': True}, routes={'spread': Route.from_nodes(
            ['S', 'TA', 'DA', 'DB', 'TB', 'R'], graph)})
        for i in range(1, 11):
            key = ('spread', i, 1)
            schedule.src_offsets[key] = (i - 1) * 4_000
            schedule.cycle_shifts[key] = 0
            schedule.extra_delays[key] = 0
        gcl = compile_gcl(schedule, graph, 'S', [app])
        self.assertEqual(len(gcl.entries), 10)
        self.assertTrue(set(e.queue for e in gcl.entries) <= set(range(1, 9)))


class TestDipTables(unittest.TestCase):
    def test_worked_example_core_hop(self):
        """Test that cycle 1 at v2 maps to cycle 0 at v3"""
        scenario = ScenarioGenerator().worked_example()
        schedule = example_schedule(scenario.graph)
        table = compile_dip_table(schedule, scenario.graph, 'v3', scenario.apps)
        self.assertEqual(table.lookup('v2', 'v4', 1), (0, 0))
        edge = compile_dip_table(schedule, scenario.graph, 'v2', scenario.apps)
        self.assertEqual(edge.edge_entries[('tau', 1, 1)], (1, 1, 1))
        self.assertEqual(edge.edge_entries[('tau', 1, 2)], (1, 1, 0))

    def test_identity_plus_one(self):
        """Test a core hop with zero delay and zero epoch offset"""
        time = TimeConfig.from_cycle_time(40_000, 10_000)
        names = ['S', 'TA', 'DA', 'C', 'DB', 'TB', 'R']
        kinds = [NodeKind.SOURCE_HOST, NodeKind.TAS_EDGE_SWITCH, NodeKind.DIP_EDGE_ROUTER, NodeKind.DIP_ROUTER,
                 NodeKind.DIP_EDGE_ROUTER, NodeKind.TAS_EDGE_SWITCH, NodeKind.DEST_HOST]
        nodes = [Node(v, k) for v, k in zip(names, kinds)]
        links = [Link(a, b, GBPS, 0 if a == 'DA' else 500) for a, b in zip(names, names[1:])]
        graph = build_graph(nodes, links, time)
        app = Application('a', 'S', 'R', e2e=200_000, msg_len=100, period=40_000)
        schedule = Schedule(admission={'a': True}, routes={'a': Route.from_nodes(names, graph)},
                            src_offsets={('a', 1, 1): 0}, cycle_shifts={('a', 1, 1): 0},
                            extra_delays={('a', 1, 1): 0})
        table = compile_dip_table(schedule, graph, 'C', [app])
        self.assertEqual(table.mappings[('DA', 'DB')], {x: ((x + 1) % 4, (x + 1) % 4) for x in range(4)})

    def test_not_a_dip_router(self):
        scenario = ScenarioGenerator().worked_example()
        with self.assertRaises(ConfigurationError):
            compile_dip_table(Schedule(), scenario.graph, 'v1', scenario.apps)


class TestPifo(unittest.TestCase):
    def setUp(self):
        scenario = ScenarioGenerator().worked_example()
        self.graph, self.apps = scenario.graph, scenario.apps
        self.schedule = example_schedule(self.graph)

    def test_ranks_are_departure_offsets(self):
        """Test rank = arrival offset of the DIP cycle plus the extra delay"""
        program = compile_pifo(self.schedule, self.graph, 'v4', self.apps)
        self.assertEqual([(e.packet, e.cycle, e.rank) for e in program.entries],
                         [(('tau', 1, 1), 0, 11_500), (('tau', 1, 2), 0, 23_500)])

    def test_duplicate_rank(self):
        self.schedule.extra_delays[('tau', 1, 2)] = 0
        with self.assertRaises(PifoCompileError):
            compile_pifo(self.schedule, self.graph, 'v4', self.apps)

    def test_only_tas_edge(self):
        with self.assertRaises(ConfigurationError):
            compile_pifo(self.schedule, self.graph, 'v0', self.apps)


class TestCompileAll(unittest.TestCase):
    def test_programs_per_node(self):
        """Test which program parts each device gets"""
        scenario = ScenarioGenerator().worked_example()
        programs = compile_all(example_schedule(scenario.graph), scenario.graph, scenario.apps)
        self.assertEqual(set(programs), {'v0', 'v1', 'v2', 'v3', 'v4', 'v5'})
        self.assertIsInstance(programs['v1'].gcls['v2'], GateControlList)
        self.assertIsNotNone(programs['v2'].dip_table)
        self.assertIsNotNone(programs['v4'].pifo)
        self.assertEqual(programs['v4'].forwarding, {'tau': 'v5'})
        self.assertEqual(programs['v5'].forwarding, {})
        serialized = programs['v4'].to_dict()
        self.assertEqual(serialized['kind'], 'TasEdgeSwitch')
        self.assertEqual(serialized['gcl'][0]['entries'][0]['gate_states'], 'ccccccco')

    def test_compiles_solver_output(self):
        """Test that compilation never fails on a solver schedule"""
        for seed in range(5):
            scenario = ScenarioGenerator(seed).small_instance(n_apps=4)
            result = solve(scenario.graph, scenario.apps, SolverConfig())
            programs = DeviceCompiler(result, scenario.graph, scenario.apps).compile_all()
            self.assertEqual(len(programs), len(scenario.graph.nodes))


if __name__ == '__main__':
    unittest.main()
