"""
Network model: timing configuration, nodes, links and the directed graph
All times are integer nanoseconds, bandwidths are integer bits per second.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Tuple

import networkx as nx

from ..utils.errors import ConfigurationError

NS_PER_SECOND = 1_000_000_000


def ceil_div(a: int, b: int) -> int:
    """Integer ceiling division, valid for negative numerators"""
    return -(-a // b)


@dataclass(frozen=True)
class TimeConfig:
    """Cycle time, hypercycle and DIP cycle lengths (t_hc == t_ct == n_dip * t_dip)"""
    t_ct: int
    t_dip: int
    n_dip: int
    t_hc: int

    def __post_init__(self):
        for name in ('t_ct', 't_dip', 'n_dip', 't_hc'):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        if self.t_hc != self.t_ct:
            raise ConfigurationError(f"hypercycle {self.t_hc} ns differs from cycle time {self.t_ct} ns")
        if self.t_hc != self.n_dip * self.t_dip:
            raise ConfigurationError(
                f"hypercycle {self.t_hc} ns is not {self.n_dip} DIP cycles of {self.t_dip} ns")

    @classmethod
    def from_cycle_time(cls, t_ct: int, t_dip: int) -> 'TimeConfig':
        """Derive n_dip and t_hc from the cycle time and the DIP cycle length"""
        if t_dip <= 0 or t_ct <= 0 or t_ct % t_dip != 0:
            raise ConfigurationError(f"cycle time {t_ct} ns is not a multiple of the DIP cycle {t_dip} ns")
        return cls(t_ct=t_ct, t_dip=t_dip, n_dip=t_ct // t_dip, t_hc=t_ct)


class NodeKind(str, Enum):
    SOURCE_HOST = 'SourceHost'
    DEST_HOST = 'DestHost'
    TAS_SWITCH = 'TasSwitch'
    TAS_EDGE_SWITCH = 'TasEdgeSwitch'
    DIP_ROUTER = 'DipRouter'
    DIP_EDGE_ROUTER = 'DipEdgeRouter'

    @property
    def is_dip(self) -> bool:
        return self in (NodeKind.DIP_ROUTER, NodeKind.DIP_EDGE_ROUTER)

    @property
    def is_tas_side(self) -> bool:
        """Nodes whose egress ports are driven by a gate control list"""
        return self in (NodeKind.SOURCE_HOST, NodeKind.TAS_SWITCH, NodeKind.TAS_EDGE_SWITCH)

    @property
    def is_host(self) -> bool:
        return self in (NodeKind.SOURCE_HOST, NodeKind.DEST_HOST)


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    epoch: int = 0


@dataclass(frozen=True)
class Link:
    """Directed link; queues counts the deterministic egress queues at src"""
    src: str
    dst: str
    bw_bps: int
    delay_ns: int
    queues: int = 8

    @property
    def key(self) -> Tuple[str, str]:
        return (self.src, self.dst)

    def tx_time(self, length_bytes: int) -> int:
        """Transmission time of length_bytes on this link, rounded up to whole ns"""
        return ceil_div(8 * length_bytes * NS_PER_SECOND, self.bw_bps)

    def cycle_capacity_bits(self, t_dip: int) -> int:
        """Bits this link can carry in one DIP cycle, scaled by 1e9 (exact integer)"""
        return t_dip * self.bw_bps


class NetworkGraph:
    """Immutable directed topology with precomputed epoch offsets per link"""

    def __init__(self, nodes: Dict[str, Node], links: Dict[Tuple[str, str], Link], time: TimeConfig):
        self.nodes = nodes
        self.links = links
        self.time = time
        self.digraph = nx.DiGraph()
        for node in nodes.values():
            self.digraph.add_node(node.id, kind=node.kind)
        for link in links.values():
            self.digraph.add_edge(link.src, link.dst, delay=link.delay_ns)
        self._offsets = {key: (nodes[key[0]].epoch - nodes[key[1]].epoch) % time.t_hc for key in links}

    def node(self, node_id: str) -> Node:
        return self.nodes[node_id]

    def link(self, src: str, dst: str) -> Link:
        try:
            return self.links[(src, dst)]
        except KeyError:
            raise ConfigurationError(f"no link {src} -> {dst}") from None

    def kind(self, node_id: str) -> NodeKind:
        return self.nodes[node_id].kind

    def nodes_of_kind(self, *kinds: NodeKind) -> List[Node]:
        return [n for n in self.nodes.values() if n.kind in kinds]

    def out_links(self, node_id: str) -> List[Link]:
        return [self.links[(node_id, dst)] for dst in sorted(self.digraph.successors(node_id))]

    def offset(self, link: Link) -> int:
        """Epoch offset of the link, normalized into [0, t_hc)"""
        return self._offsets[link.key]

    def with_bandwidth_scale(self, factor: int) -> 'NetworkGraph':
        """Copy of the graph with every link bandwidth multiplied by factor"""
        scaled = {k: Link(l.src, l.dst, l.bw_bps * factor, l.delay_ns, l.queues) for k, l in self.links.items()}
        return NetworkGraph(dict(self.nodes), scaled, self.time)

    def __repr__(self) -> str:
        return f"NetworkGraph(|V|={len(self.nodes)}, |L|={len(self.links)})"


def build_graph(nodes: Iterable[Node], links: Iterable[Link], time: TimeConfig) -> NetworkGraph:
    """Validate nodes and links and build the queryable graph"""
    node_map: Dict[str, Node] = {}
    for node in nodes:
        if node.id in node_map:
            raise ConfigurationError(f"duplicate node id {node.id!r}")
        if not 0 <= node.epoch < time.t_hc:
            raise ConfigurationError(f"epoch of {node.id!r} must lie in [0, {time.t_hc}), got {node.epoch}")
        node_map[node.id] = node

    link_map: Dict[Tuple[str, str], Link] = {}
    for link in links:
        for end in (link.src, link.dst):
            if end not in node_map:
                raise ConfigurationError(f"dangling endpoint {end!r} on link {link.src} -> {link.dst}")
        if link.key in link_map:
            raise ConfigurationError(f"duplicate link {link.src} -> {link.dst}")
        if link.bw_bps <= 0 or link.delay_ns < 0:
            raise ConfigurationError(f"link {link.src} -> {link.dst} needs bw > 0 and delay >= 0")
        if node_map[link.src].kind.is_dip and link.queues < 2:
            raise ConfigurationError(
                f"link {link.src} -> {link.dst} leaves a DIP router and needs at least 2 queues, got {link.queues}")
        link_map[link.key] = link

    return NetworkGraph(node_map, link_map, time)


def epoch_offset(link: Link, graph: NetworkGraph) -> int:
    """(epoch(src) - epoch(dst)) mod t_hc"""
    if link.key not in graph.links:
        raise ConfigurationError(f"link {link.src} -> {link.dst} is not part of the graph")
    return graph.offset(link)
