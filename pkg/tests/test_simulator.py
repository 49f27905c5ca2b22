"""
Test cases for the discrete-event simulator and interference generation
"""

import unittest
import sys
import tempfile
from pathlib import Path

import pandas as pd
from pandas.testing import assert_frame_equal

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from src.data.scenario_generator import ScenarioGenerator, bottleneck_links
from src.engine.device_compiler import compile_all
from src.engine.scheduler import solve
from src.engine.validator import ScheduleValidator
from src.models.schedule import SolverConfig
from src.models.traffic import Application
from src.simulation.interference import InterferenceProfile, uniform_interference
from src.simulation.simulator import MessageRecord, SimTrace, measure_jitter, run, run_best_effort
from src.utils.errors import ConfigurationError, JitterUndefinedError
from tests.helpers import chain_graph, example_schedule, hand_schedule

HORIZON = 4


def scheduled_rows(trace):
    frame = trace.packet_frame()
    frame = frame[frame['app_id'].notna()]
    return frame.sort_values(['app_id', 'msg_index', 'pkt_index', 'node']).reset_index(drop=True)


class TestScheduledSimulation(unittest.TestCase):
    def setUp(self):
        scenario = ScenarioGenerator().worked_example()
        self.graph, self.apps = scenario.graph, scenario.apps
        self.schedule = example_schedule(self.graph)
        self.programs = compile_all(self.schedule, self.graph, self.apps)
        self.timelines = ScheduleValidator(self.graph, self.apps).timelines(self.schedule)

    def test_departures_match_analysis(self):
        """Test that every simulated departure equals the analytic timeline"""
        trace = run(self.graph, self.programs, self.apps, horizon=HORIZON)
        t_ct = self.graph.time.t_ct
        for record in trace.packets:
            h = record.msg_index - 1
            timeline = self.timelines[(record.app_id, 1, record.pkt_index)]
            if record.node == 'v5':
                self.assertEqual(record.arrival_ns, timeline.dest_arrival + h * t_ct)
            elif record.node in timeline.departures:
                self.assertEqual(record.departure_ns, timeline.departures[record.node] + h * t_ct)
        self.assertEqual(len(trace.messages), HORIZON)

    def test_constant_delay(self):
        """Test zero jitter at the worked-example delay"""
        trace = run(self.graph, self.programs, self.apps, horizon=HORIZON)
        self.assertEqual(set(trace.delays('tau')), {117_000})
        self.assertEqual(measure_jitter(trace, 'tau'), 0)

    def test_interference_does_not_move_scheduled_packets(self):
        """Test that best-effort load leaves every scheduled timestamp unchanged"""
        quiet = run(self.graph, self.programs, self.apps, horizon=HORIZON)
        for level in (0.2, 0.59, 0.9):
            interference = uniform_interference(self.graph, bottleneck_links(self.graph), level, seed=1)
            loaded = run(self.graph, self.programs, self.apps, interference, horizon=HORIZON)
            assert_frame_equal(scheduled_rows(quiet), scheduled_rows(loaded))
            self.assertGreater(loaded.events, quiet.events)

    def test_deterministic(self):
        interference = uniform_interference(self.graph, bottleneck_links(self.graph), 0.59, seed=3)
        first = run(self.graph, self.programs, self.apps, interference, horizon=HORIZON)
        second = run(self.graph, self.programs, self.apps, interference, horizon=HORIZON)
        assert_frame_equal(first.packet_frame(), second.packet_frame())
        self.assertEqual(first.drops, second.drops)

    def test_message_indices(self):
        """Test that messages are numbered across hypercycles"""
        trace = run(self.graph, self.programs, self.apps, horizon=3)
        self.assertEqual(sorted(m.msg_index for m in trace.messages), [1, 2, 3])

    def test_invalid_horizon(self):
        with self.assertRaises(ConfigurationError):
            run(self.graph, self.programs, self.apps, horizon=0)

    def test_write_csv(self):
        trace = run(self.graph, self.programs, self.apps, horizon=2)
        with tempfile.TemporaryDirectory() as tmp:
            trace.write_csv(Path(tmp))
            summary = pd.read_csv(Path(tmp) / 'summary.csv')
            self.assertEqual(summary.loc[0, 'jitter_ns'], 0)
            self.assertTrue((Path(tmp) / 'trace.csv').exists())


class TestSolverScheduleSimulation(unittest.TestCase):
    def test_random_instances_are_exact(self):
        """Test simulated arrivals against the analysis on solver schedules"""
        for seed in range(6):
            scenario = ScenarioGenerator(seed).small_instance(n_apps=4)
            graph, apps = scenario.graph, scenario.apps
            result = solve(graph, apps, SolverConfig(seed=seed))
            programs = compile_all(result, graph, apps)
            timelines = ScheduleValidator(graph, apps).timelines(result)
            trace = run(graph, programs, apps, horizon=3)
            t_ct = graph.time.t_ct
            for record in trace.packets:
                if record.node != scenario.app(record.app_id).dest:
                    continue
                app = scenario.app(record.app_id)
                n_messages = app.n_messages(graph.time)
                h, i = divmod(record.msg_index - 1, n_messages)
                timeline = timelines[(record.app_id, i + 1, record.pkt_index)]
                self.assertEqual(record.arrival_ns, timeline.dest_arrival + h * t_ct, seed)
            self.assertEqual(len(trace.messages), 3 * sum(scenario.app(a).n_messages(graph.time)
                                                          for a in result.accepted))


class TestWrappingWindowSimulation(unittest.TestCase):
    def assert_exact(self, graph, apps, schedule, horizon=3):
        programs = compile_all(schedule, graph, apps)
        timelines = ScheduleValidator(graph, apps).timelines(schedule)
        trace = run(graph, programs, apps, horizon=horizon)
        arrivals = [r for r in trace.packets if r.node == 'R']
        self.assertEqual(len(arrivals), horizon)
        for record in arrivals:
            h = record.msg_index - 1
            timeline = timelines[(record.app_id, 1, record.pkt_index)]
            self.assertEqual(record.arrival_ns, timeline.dest_arrival + h * graph.time.t_ct)
        self.assertEqual(measure_jitter(trace, apps[0].id), 0)

    def test_egress_window_past_cycle_end(self):
        """Test that a gate window spanning t_ct at the egress edge is replayed exactly"""
        graph = chain_graph()
        apps = [Application('a', 'S', 'R', e2e=100_000, msg_len=500, period=40_000)]
        self.assert_exact(graph, apps, hand_schedule(graph, {'a': [(0, 0, 37_500)]}))

    def test_ingress_window_past_cycle_end(self):
        graph = chain_graph()
        apps = [Application('a', 'S', 'R', e2e=100_000, msg_len=500, period=40_000, phase=32_000)]
        self.assert_exact(graph, apps, solve(graph, apps, SolverConfig()))


class TestBestEffortSimulation(unittest.TestCase):
    def setUp(self):
        scenario = ScenarioGenerator().worked_example()
        self.graph, self.apps = scenario.graph, scenario.apps
        self.routes = example_schedule(self.graph).routes

    def test_unloaded_delay(self):
        """Test that without load packets only pay transmission and propagation"""
        trace = run_best_effort(self.graph, self.apps, self.routes, horizon=3)
        self.assertEqual(len(trace.messages), 3)
        self.assertEqual(trace.drops, 0)
        self.assertEqual(measure_jitter(trace, 'tau'), 0)

    def test_load_causes_jitter(self):
        """Test that interference makes best-effort delays vary"""
        interference = uniform_interference(self.graph, bottleneck_links(self.graph), 0.59, seed=0)
        trace = run_best_effort(self.graph, self.apps, self.routes, interference, horizon=40)
        self.assertGreater(measure_jitter(trace, 'tau'), 0)


class TestJitter(unittest.TestCase):
    def test_range_of_delays(self):
        trace = SimTrace(messages=[MessageRecord('a', 1, 0, 662_000), MessageRecord('a', 2, 50_000, 1_201_000)])
        self.assertEqual(measure_jitter(trace, 'a'), 489_000)

    def test_single_message(self):
        trace = SimTrace(messages=[MessageRecord('a', 1, 0, 662_000)])
        with self.assertRaises(JitterUndefinedError):
            measure_jitter(trace, 'a')


class TestInterference(unittest.TestCase):
    def setUp(self):
        self.graph = ScenarioGenerator().worked_example().graph
        self.links = bottleneck_links(self.graph)

    def test_bottleneck_links(self):
        """Test that only links leaving source hosts carry interference"""
        self.assertEqual(self.links, [('v0', 'v1')])
        core = ScenarioGenerator().core_graph()
        self.assertEqual(len(bottleneck_links(core)), 5)
        self.assertTrue(all(src.startswith('S') for src, _ in bottleneck_links(core)))

    def test_offered_utilization(self):
        """Test that the flows load every link to the requested share"""
        for level in (0.2, 0.59, 0.9):
            profile = uniform_interference(self.graph, self.links, level)
            self.assertEqual(len(profile.flows), round(level / 0.05))
            for link in self.links:
                self.assertAlmostEqual(profile.utilization(self.graph, link), level, places=3)

    def test_flows_of_a_link_burst_together(self):
        """Test one shared phase per link and a burst that grows with the load"""
        core = ScenarioGenerator().core_graph()
        links = bottleneck_links(core)
        bursts = []
        for level in (0.2, 0.59, 0.9):
            profile = uniform_interference(core, links, level, seed=3)
            for link in links:
                flows = [f for f in profile.flows if f.link == link]
                self.assertEqual(len({f.phase for f in flows}), 1, (level, link))
                self.assertLess(flows[0].phase, flows[0].interval)
            bursts.append(sum(1 for f in profile.flows if f.link == links[0]))
        self.assertEqual(bursts, [4, 12, 18])

    def test_zero_and_full(self):
        self.assertEqual(uniform_interference(self.graph, self.links, 0.0).flows, ())
        with self.assertRaises(ConfigurationError):
            uniform_interference(self.graph, self.links, 1.0)

    def test_without(self):
        profile = uniform_interference(self.graph, self.links, 0.2, seed=5)
        self.assertEqual(profile.without(), InterferenceProfile((), 5))


if __name__ == '__main__':
    unittest.main()
