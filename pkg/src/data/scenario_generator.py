"""
Scenario Generator
Builds the worked end-to-end example, a hierarchical core network,
small random instances and application sets for load sweeps
"""

import logging
import random
from typing import List, Optional, Tuple

from .scenario_loader import Scenario
from ..models.network import Link, NetworkGraph, Node, NodeKind, TimeConfig, build_graph
from ..models.traffic import DEFAULT_MTU, Application, check_application, draw_phases

logger = logging.getLogger(__name__)

GBPS = 1_000_000_000
MBPS = 1_000_000

ACCESS_DELAY = 1_500
CORE_DELAY = 150_000

# ring of five core routers, every edge router hangs off one core router,
# chords between neighbouring edge routers
CORE_LINKS = [
    ('C0', 'C1'), ('C1', 'C2'), ('C2', 'C3'), ('C3', 'C4'), ('C4', 'C0'),
    ('D0', 'C0'), ('D1', 'C0'), ('D2', 'C1'), ('D3', 'C1'), ('D4', 'C2'),
    ('D5', 'C2'), ('D6', 'C3'), ('D7', 'C3'), ('D8', 'C4'), ('D9', 'C4'),
    ('D1', 'D2'), ('D3', 'D4'), ('D5', 'D6'), ('D7', 'D8'), ('D9', 'D0'),
    ('C0', 'C2'), ('C1', 'C3'),
]


def _both_ways(a: str, b: str, bw: int, delay: int, queues: int = 8) -> List[Link]:
    return [Link(a, b, bw, delay, queues), Link(b, a, bw, delay, queues)]


class ScenarioGenerator:
    """Reproducible scenario builder; every method draws from the generator's own seed"""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def worked_example(self) -> Scenario:
        """Two-packet message crossing one access network, two DIP edge routers and another access network"""
        time = TimeConfig.from_cycle_time(50_000, 10_000)
        nodes = [
            Node('v0', NodeKind.SOURCE_HOST, 20_000),
            Node('v1', NodeKind.TAS_EDGE_SWITCH, 20_000),
            Node('v2', NodeKind.DIP_EDGE_ROUTER, 0),
            Node('v3', NodeKind.DIP_EDGE_ROUTER, 0),
            Node('v4', NodeKind.TAS_EDGE_SWITCH, 0),
            Node('v5', NodeKind.DEST_HOST, 0),
        ]
        links = [
            Link('v0', 'v1', GBPS, ACCESS_DELAY),
            Link('v1', 'v2', GBPS, ACCESS_DELAY),
            Link('v2', 'v3', 10 * GBPS, 25_000),
            Link('v3', 'v4', 10 * GBPS, ACCESS_DELAY),
            Link('v4', 'v5', GBPS, ACCESS_DELAY),
        ]
        graph = build_graph(nodes, links, time)
        app = Application('tau', 'v0', 'v5', e2e=200_000, msg_len=3000, period=50_000, phase=0)
        check_application(app, graph)
        return Scenario(graph, [app], self.seed)

    def core_graph(self, t_ct: int = 2_000_000, t_dip: int = 10_000, random_epochs: bool = True) -> NetworkGraph:
        """15 DIP routers, 10 access networks; hosts 0-4 send, hosts 5-9 receive"""
        time = TimeConfig.from_cycle_time(t_ct, t_dip)

        def epoch() -> int:
            return self.rng.randrange(0, time.t_hc, 500) if random_epochs else 0

        nodes, links = [], []
        for i in range(5):
            nodes.append(Node(f"C{i}", NodeKind.DIP_ROUTER, epoch()))
        for i in range(10):
            nodes.append(Node(f"D{i}", NodeKind.DIP_EDGE_ROUTER, epoch()))
        for a, b in CORE_LINKS:
            links += _both_ways(a, b, 10 * GBPS, CORE_DELAY)
        for i in range(10):
            host = f"S{i}" if i < 5 else f"R{i}"
            nodes.append(Node(f"T{i}", NodeKind.TAS_EDGE_SWITCH, epoch()))
            nodes.append(Node(host, NodeKind.SOURCE_HOST if i < 5 else NodeKind.DEST_HOST, epoch()))
            links += _both_ways(f"T{i}", f"D{i}", 10 * GBPS, ACCESS_DELAY)
            links += _both_ways(host, f"T{i}", GBPS, ACCESS_DELAY)
        return build_graph(nodes, links, time)

    def core_scenario(self, n_apps: int = 20, **graph_options) -> Scenario:
        graph = self.core_graph(**graph_options)
        t_ct = graph.time.t_ct
        periods = [p for p in (t_ct // 4, t_ct // 2, t_ct) if t_ct % p == 0]
        apps = []
        for i in range(n_apps):
            apps.append(Application(
                f"app{i:02d}", f"S{self.rng.randrange(5)}", f"R{5 + self.rng.randrange(5)}",
                e2e=self.rng.choice([1_500_000, 2_000_000, 3_000_000]),
                msg_len=self.rng.choice([500, 1000, 1500, 3000]),
                period=self.rng.choice(periods)))
        return Scenario(graph, draw_phases(apps, graph.time, self.seed), self.seed)

    def load_apps(self, graph: NetworkGraph, load_mbps: float, msg_len: int = 3000,
                  period: Optional[int] = None, e2e: int = 1_500_000, mtu: int = DEFAULT_MTU) -> List[Application]:
        """Applications whose combined rate per source host is about load_mbps"""
        period = period or graph.time.t_ct // 10
        rate = msg_len * 8 * 1e9 / period
        per_host = round(load_mbps * MBPS / rate)
        sources = sorted(n.id for n in graph.nodes_of_kind(NodeKind.SOURCE_HOST))
        sinks = sorted(n.id for n in graph.nodes_of_kind(NodeKind.DEST_HOST))
        apps = []
        for src in sources:
            for k in range(per_host):
                apps.append(Application(f"{src}-{k}", src, self.rng.choice(sinks), e2e, msg_len, period, mtu))
        return draw_phases(apps, graph.time, self.seed)

    def small_instance(self, n_apps: int = 3, n_dip: int = 4, t_dip: int = 10_000) -> Scenario:
        """Six nodes, one route and DIP links that hold about one packet per cycle"""
        time = TimeConfig.from_cycle_time(n_dip * t_dip, t_dip)
        nodes = [
            Node('S', NodeKind.SOURCE_HOST, 0),
            Node('TA', NodeKind.TAS_EDGE_SWITCH, 0),
            Node('DA', NodeKind.DIP_EDGE_ROUTER, self.rng.randrange(0, time.t_hc, t_dip)),
            Node('DB', NodeKind.DIP_EDGE_ROUTER, self.rng.randrange(0, time.t_hc, t_dip)),
            Node('TB', NodeKind.TAS_EDGE_SWITCH, 0),
            Node('R', NodeKind.DEST_HOST, 0),
        ]
        links = [
            Link('S', 'TA', GBPS, 500),
            Link('TA', 'DA', GBPS, 500),
            Link('DA', 'DB', GBPS, 2_000, queues=2),
            Link('DB', 'TB', GBPS, 500, queues=2),
            Link('TB', 'R', GBPS, 500),
        ]
        graph = build_graph(nodes, links, time)
        apps = []
        for i in range(n_apps):
            apps.append(Application(
                f"a{i}", 'S', 'R', e2e=self.rng.choice([3, 4, 5, 6]) * t_dip,
                msg_len=self.rng.choice([300, 500, 800]), period=time.t_ct,
                phase=self.rng.randrange(n_dip) * t_dip))
        return Scenario(graph, apps, self.seed)


def sweep_levels(text: str) -> Tuple[float, ...]:
    """Parse a comma separated list of levels and check that it ascends"""
    levels = tuple(float(x) for x in text.split(',') if x.strip())
    if list(levels) != sorted(levels):
        raise ValueError(f"levels must be ascending: {text}")
    return levels


def bottleneck_links(graph: NetworkGraph) -> List[Tuple[str, str]]:
    """Access links leaving source hosts

    Every route starts on one of them and they are the slowest links the
    traffic of a source shares, so interference utilization is measured
    against them.
    """
    return sorted(key for key, link in graph.links.items() if graph.kind(link.src) == NodeKind.SOURCE_HOST)
