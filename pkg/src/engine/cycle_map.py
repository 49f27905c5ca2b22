"""
Cycle and offset mapping between the TAS access domains and the DIP core

All functions are pure integer arithmetic. Cycle indices returned by the
mapping functions are reduced modulo n_dip; the timeline keeps unwrapped
cycle numbers so that absolute times can be reconstructed.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..models.network import Link, NetworkGraph, TimeConfig, ceil_div
from ..models.schedule import Route
from ..models.traffic import Packet
from ..utils.errors import CycleMapError, UnboundVariableError


@dataclass(frozen=True)
class ScheduleEntry:
    """Per-packet decision variables: source offset, cycle shift, extra delay"""
    phi_v0: Optional[int]
    r: Optional[int]
    extra_delay: Optional[int]

    def require(self) -> 'ScheduleEntry':
        for name in ('phi_v0', 'r', 'extra_delay'):
            if getattr(self, name) is None:
                raise UnboundVariableError(f"decision variable {name} is unbound")
        return self


def _check_cycle(c: int, time: TimeConfig) -> None:
    if not 0 <= c < time.n_dip:
        raise CycleMapError(f"cycle {c} outside [0, {time.n_dip - 1}]")


def check_shift(r: int, next_link: Link) -> None:
    if not 0 <= r <= next_link.queues - 2:
        raise CycleMapError(
            f"cycle shift {r} outside [0, {next_link.queues - 2}] for link {next_link.src} -> {next_link.dst}")


def theta_tas_to_dip(phi_v1: int, tx_time: int, link: Link, r: int, time: TimeConfig,
                     delta: int = 0, next_link: Optional[Link] = None) -> int:
    """Cycle in which the DIP edge router at the end of link retransmits the packet"""
    if not 0 <= phi_v1 <= time.t_ct - tx_time:
        raise CycleMapError(f"offset {phi_v1} outside [0, {time.t_ct - tx_time}]")
    if r < 0:
        raise CycleMapError(f"cycle shift {r} is negative")
    if next_link is not None:
        check_shift(r, next_link)
    return (ceil_div(phi_v1 + tx_time + link.delay_ns + delta, time.t_dip) + r) % time.n_dip


def theta_dip_to_tas(c: int, link: Link, time: TimeConfig, delta: int = 0) -> int:
    """Latest arrival offset at the TAS edge switch of a packet sent in cycle c"""
    _check_cycle(c, time)
    return ((c + 1) * time.t_dip + link.delay_ns + delta) % time.t_ct


def vartheta_dip_to_dip(c: int, link: Link, time: TimeConfig, delta: int = 0) -> int:
    """Cycle at the downstream DIP router for a packet sent in cycle c"""
    _check_cycle(c, time)
    return ceil_div((c + 1) * time.t_dip + link.delay_ns + delta, time.t_dip) % time.n_dip


def tas_offsets(packet: Packet, route: Route, phi_v0: int, graph: NetworkGraph) -> Dict[str, int]:
    """Local offsets on the ingress access segment v_0..v_k (forwarded immediately)"""
    time = graph.time
    src_epoch = graph.node(route.nodes[0]).epoch
    offsets = {}
    elapsed = 0
    for a in range(route.k + 1):
        node = route.nodes[a]
        offsets[node] = (phi_v0 + src_epoch + elapsed - graph.node(node).epoch) % time.t_ct
        link = route.link_at(graph, a)
        elapsed += link.tx_time(packet.length) + link.delay_ns
    return offsets


def route_cycles(packet: Packet, route: Route, r: int, graph: NetworkGraph) -> List[int]:
    """Transmission cycles (c_{k+1}, ..., c_m) along the core segment"""
    v_k = route.nodes[route.k]
    if v_k not in packet.per_hop_offsets:
        raise UnboundVariableError(f"offset of packet {packet.key} at {v_k} is unknown")
    time = graph.time
    ingress = route.link_at(graph, route.k)
    cycles = [theta_tas_to_dip(packet.per_hop_offsets[v_k], ingress.tx_time(packet.length), ingress, r, time,
                               graph.offset(ingress), route.link_at(graph, route.k + 1))]
    for a in range(route.k + 1, route.m):
        link = route.link_at(graph, a)
        cycles.append(vartheta_dip_to_dip(cycles[-1], link, time, graph.offset(link)))
    return cycles


def packet_e2e_delay(packet: Packet, route: Route, entry: ScheduleEntry, graph: NetworkGraph,
                     message_offset: int) -> int:
    """Packet-level end-to-end delay from message arrival to reception at v_n"""
    entry.require()
    time = graph.time
    t_dip = time.t_dip
    links = route.links(graph)
    k, m = route.k, route.m

    wait = (entry.phi_v0 - message_offset) % time.t_ct
    tas_in = sum(l.tx_time(packet.length) + l.delay_ns for l in links[:k])

    phi_vk = (entry.phi_v0 + graph.node(route.nodes[0]).epoch + tas_in
              - graph.node(route.nodes[k]).epoch) % time.t_ct
    delta_k = graph.offset(links[k])
    ready = ceil_div(phi_vk + links[k].tx_time(packet.length) + links[k].delay_ns + delta_k, t_dip)
    cycle = ready + entry.r
    ingress = cycle * t_dip - phi_vk - delta_k

    core = 0
    for a in range(k + 1, m):
        link = links[a]
        delta = graph.offset(link)
        nxt = ceil_div((cycle + 1) * t_dip + link.delay_ns + delta, t_dip)
        core += (nxt - cycle) * t_dip - delta
        cycle = nxt

    egress = t_dip + links[m].delay_ns + entry.extra_delay
    tas_out = sum(l.tx_time(packet.length) + l.delay_ns for l in links[m + 1:])
    return wait + tas_in + ingress + core + egress + tas_out


@dataclass
class PacketTimeline:
    """Absolute times of one packet of the message released in hypercycle 0"""
    message_arrival: int
    departures: Dict[str, int] = field(default_factory=dict)
    offsets: Dict[str, int] = field(default_factory=dict)
    cycles: List[int] = field(default_factory=list)
    dest_arrival: int = 0

    @property
    def delay(self) -> int:
        return self.dest_arrival - self.message_arrival

    def cycle_indices(self, n_dip: int) -> List[int]:
        return [c % n_dip for c in self.cycles]


def packet_timeline(packet: Packet, route: Route, entry: ScheduleEntry, graph: NetworkGraph,
                    message_offset: int) -> PacketTimeline:
    """Per-hop departure times, local offsets and absolute core cycles of a packet"""
    entry.require()
    time = graph.time
    epoch = {v: graph.node(v).epoch for v in route.nodes}
    links = route.links(graph)
    nodes = route.nodes
    k, m, n = route.k, route.m, route.n

    timeline = PacketTimeline(message_arrival=epoch[nodes[0]] + message_offset)
    now = timeline.message_arrival + (entry.phi_v0 - message_offset) % time.t_ct
    for a in range(k + 1):
        timeline.departures[nodes[a]] = now
        now += links[a].tx_time(packet.length) + links[a].delay_ns

    cycle = ceil_div(now - epoch[nodes[k + 1]], time.t_dip) + entry.r
    timeline.cycles.append(cycle)
    for a in range(k + 2, m + 1):
        prev = links[a - 1]
        cycle = ceil_div(epoch[nodes[a - 1]] + (cycle + 1) * time.t_dip + prev.delay_ns - epoch[nodes[a]],
                         time.t_dip)
        timeline.cycles.append(cycle)

    now = epoch[nodes[m]] + (cycle + 1) * time.t_dip + links[m].delay_ns + entry.extra_delay
    for a in range(m + 1, n):
        timeline.departures[nodes[a]] = now
        now += links[a].tx_time(packet.length) + links[a].delay_ns
    timeline.dest_arrival = now

    for node, departure in timeline.departures.items():
        timeline.offsets[node] = (departure - epoch[node]) % time.t_ct
    return timeline
