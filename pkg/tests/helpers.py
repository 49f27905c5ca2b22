"""
Shared fixtures: a six-node chain S - TA - DA - DB - TB - R
"""

from src.models.network import Link, Node, NodeKind, TimeConfig, build_graph
from src.models.schedule import Route, Schedule

GBPS = 1_000_000_000

CHAIN = ['S', 'TA', 'DA', 'DB', 'TB', 'R']
KINDS = [NodeKind.SOURCE_HOST, NodeKind.TAS_EDGE_SWITCH, NodeKind.DIP_EDGE_ROUTER,
         NodeKind.DIP_EDGE_ROUTER, NodeKind.TAS_EDGE_SWITCH, NodeKind.DEST_HOST]


def chain_graph(t_ct=40_000, t_dip=10_000, delay=500, epochs=None, queues=8):
    """All links 1 Gbps with the same delay; epochs default to zero"""
    time = TimeConfig.from_cycle_time(t_ct, t_dip)
    epochs = epochs or {}
    nodes = [Node(v, kind, epochs.get(v, 0)) for v, kind in zip(CHAIN, KINDS)]
    links = [Link(a, b, GBPS, delay, queues) for a, b in zip(CHAIN, CHAIN[1:])]
    return build_graph(nodes, links, time)


def hand_schedule(graph, entries):
    """entries: app id -> list of (phi_v0, r, extra_delay), one tuple per packet of message 1"""
    route = Route.from_nodes(CHAIN, graph)
    schedule = Schedule()
    for app_id, values in entries.items():
        schedule.admission[app_id] = True
        schedule.routes[app_id] = route
        for j, (phi, r, extra) in enumerate(values, start=1):
            key = (app_id, 1, j)
            schedule.src_offsets[key] = phi
            schedule.cycle_shifts[key] = r
            schedule.extra_delays[key] = extra
    return schedule


def example_schedule(graph):
    """First packet leaves at once with r = 1, the second waits 12 us and gets 12 us extra delay"""
    route = Route.from_nodes(['v0', 'v1', 'v2', 'v3', 'v4', 'v5'], graph)
    p1, p2 = ('tau', 1, 1), ('tau', 1, 2)
    return Schedule(admission={'tau': True}, routes={'tau': route}, src_offsets={p1: 0, p2: 12_000},
                    cycle_shifts={p1: 1, p2: 0}, extra_delays={p1: 0, p2: 12_000})
