"""
Device program compiler

Turns a feasible schedule into what the devices execute: gate control lists
on host and TAS switch ports, cycle mapping tables on DIP routers and PIFO
insertion ranks on egress TAS edge switches.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

from .cycle_map import PacketTimeline, theta_dip_to_tas, vartheta_dip_to_dip
from .validator import ScheduleValidator
from ..models.network import NetworkGraph, NodeKind
from ..models.schedule import Schedule
from ..models.traffic import Application, PacketKey, key_to_str, message_offset
from ..utils.errors import ConfigurationError, GclCompileError, PifoCompileError

logger = logging.getLogger(__name__)

GATE_COUNT = 8
PIFO_QUEUE = 8


def gate_string(queue: int) -> str:
    """Eight GCE gate states, leftmost character is Q1; only `queue` is open"""
    if not 1 <= queue <= GATE_COUNT:
        raise GclCompileError(f"queue {queue} has no gate; gate strings cover Q1 to Q{GATE_COUNT}")
    return ''.join('o' if q == queue else 'c' for q in range(1, GATE_COUNT + 1))


@dataclass(frozen=True)
class GateControlEntry:
    """Opens one queue at offset; every deterministic gate closes again after duration"""
    offset: int
    gate_states: str
    duration: int
    packet: PacketKey

    @property
    def queue(self) -> int:
        return self.gate_states.index('o') + 1

    def to_dict(self) -> Dict[str, Any]:
        return {'offset_ns': self.offset, 'gate_states': self.gate_states,
                'duration_ns': self.duration, 'packet': key_to_str(self.packet)}


@dataclass
class GateControlList:
    node: str
    port: str
    cycle_time: int
    entries: List[GateControlEntry] = field(default_factory=list)

    def expanded(self) -> List[Tuple[int, str]]:
        """Explicit (offset, gate_states) sequence including the closing entries"""
        closed = 'c' * GATE_COUNT
        opening = {e.offset: e.gate_states for e in self.entries}
        result = dict(opening)
        for entry in self.entries:
            end = (entry.offset + entry.duration) % self.cycle_time
            if end not in opening:
                result[end] = closed
        return sorted(result.items())

    def to_dict(self) -> Dict[str, Any]:
        return {'node': self.node, 'port': self.port, 'cycle_time_ns': self.cycle_time,
                'entries': [e.to_dict() for e in self.entries]}


@dataclass
class DipCycleTable:
    """Cycle mapping x -> (y, queue) per (upstream, downstream) pair

    Packets entering the core are listed individually in edge_entries as
    (cycle, queue, cycle shift).
    """
    node: str
    n_dip: int
    mappings: Dict[Tuple[str, str], Dict[int, Tuple[int, int]]] = field(default_factory=dict)
    edge_entries: Dict[PacketKey, Tuple[int, int, int]] = field(default_factory=dict)

    def lookup(self, upstream: str, downstream: str, x: int) -> Tuple[int, int]:
        return self.mappings[(upstream, downstream)][x]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'node': self.node,
            'mappings': [{'from': u, 'to': w, 'x': x, 'y': y, 'queue': q}
                         for (u, w), table in sorted(self.mappings.items()) for x, (y, q) in sorted(table.items())],
            'edge_entries': [{'packet': key_to_str(k), 'cycle': c, 'queue': q, 'shift': r}
                             for k, (c, q, r) in sorted(self.edge_entries.items())],
        }


@dataclass(frozen=True)
class PifoEntry:
    packet: PacketKey
    port: str
    cycle: int
    extra_delay: int
    rank: int

    def to_dict(self) -> Dict[str, Any]:
        return {'packet': key_to_str(self.packet), 'port': self.port, 'cycle': self.cycle,
                'extra_delay_ns': self.extra_delay, 'rank': self.rank}


@dataclass
class PifoProgram:
    node: str
    entries: List[PifoEntry] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {'node': self.node, 'entries': [e.to_dict() for e in self.entries]}


@dataclass
class DeviceProgram:
    node: str
    kind: NodeKind
    gcls: Dict[str, GateControlList] = field(default_factory=dict)
    dip_table: Optional[DipCycleTable] = None
    pifo: Optional[PifoProgram] = None
    forwarding: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'node': self.node,
            'kind': self.kind.value,
            'forwarding': dict(sorted(self.forwarding.items())),
            'gcl': [self.gcls[p].to_dict() for p in sorted(self.gcls)],
            'dip_table': self.dip_table.to_dict() if self.dip_table else None,
            'pifo': self.pifo.to_dict() if self.pifo else None,
        }


class DeviceCompiler:
    """Compiles the accepted part of a schedule node by node"""

    def __init__(self, schedule: Schedule, graph: NetworkGraph, apps: Iterable[Application]):
        self.schedule = schedule
        self.graph = graph
        self.validator = ScheduleValidator(graph, apps)
        self.timelines: Dict[PacketKey, PacketTimeline] = self.validator.timelines(schedule)

    def _length(self, key: PacketKey) -> int:
        return self.validator._packet_length(key)

    def _hops(self, node: str):
        """(packet key, route position) for every scheduled packet passing node"""
        for key in sorted(self.timelines):
            route = self.schedule.routes[key[0]]
            if node in route.nodes[:-1]:
                yield key, route.nodes.index(node)

    def compile_gcl(self, node: str, port: Optional[str] = None) -> GateControlList:
        kind = self.graph.kind(node)
        if not kind.is_tas_side:
            raise ConfigurationError(f"{node} is not a host or TAS switch")
        out = self.graph.out_links(node)
        if port is None:
            if len(out) != 1:
                raise GclCompileError(f"{node} has {len(out)} ports; name the port to compile")
            port = out[0].dst
        link = self.graph.link(node, port)
        t_ct = self.graph.time.t_ct

        windows = []
        for key, a in self._hops(node):
            route = self.schedule.routes[key[0]]
            if route.nodes[a + 1] != port:
                continue
            offset = self.timelines[key].offsets[node]
            tx = link.tx_time(self._length(key))
            if a == 0:
                app = self.validator.apps[key[0]]
                enqueue = message_offset(app, key[1], self.graph.time)
            else:
                enqueue = offset
            windows.append((offset, tx, enqueue, a, key))
        windows.sort()

        gcl = GateControlList(node, port, t_ct)
        if kind == NodeKind.TAS_EDGE_SWITCH:
            # egress edge ports are served by a single PIFO queue
            pifo_positions = {key for _, _, _, a, key in windows if a > self.schedule.routes[key[0]].m}
        else:
            pifo_positions = set()

        residences: Dict[int, List[Tuple[int, int]]] = defaultdict(list)
        # gate strings name at most eight queues
        queues = min(link.queues, GATE_COUNT)
        pointer = queues
        for offset, tx, enqueue, a, key in windows:
            if key in pifo_positions:
                queue = min(PIFO_QUEUE, queues)
            else:
                queue = self._pick_queue(residences, pointer, queues, enqueue, offset + tx, t_ct)
                if queue is None:
                    raise GclCompileError(f"{node} -> {port}: more waiting packets than queues at offset {offset}")
                pointer = queue - 1 if queue > 1 else queues
            residences[queue].append((enqueue, (offset + tx - enqueue) % t_ct or t_ct))
            gcl.entries.append(GateControlEntry(offset, gate_string(queue), tx, key))
        logger.debug("GCL %s -> %s: %d entries", node, port, len(gcl.entries))
        return gcl

    @staticmethod
    def _pick_queue(residences, pointer: int, queues: int, start: int, end: int, t_ct: int) -> Optional[int]:
        """First queue, counting down from pointer, that keeps FIFO order with its residents"""
        length = (end - start) % t_ct or t_ct
        for step in range(queues):
            queue = (pointer - 1 - step) % queues + 1
            if all(_fifo_compatible(start, length, s, l, t_ct) for s, l in residences[queue]):
                return queue
        return None

    def compile_dip_table(self, node: str) -> DipCycleTable:
        if not self.graph.kind(node).is_dip:
            raise ConfigurationError(f"{node} is not a DIP router")
        time = self.graph.time
        table = DipCycleTable(node, time.n_dip)
        for key, a in self._hops(node):
            route = self.schedule.routes[key[0]]
            timeline = self.timelines[key]
            downstream = route.nodes[a + 1]
            out = self.graph.link(node, downstream)
            cycle = timeline.cycles[a - route.k - 1] % time.n_dip
            if a == route.k + 1:
                table.edge_entries[key] = (cycle, cycle % out.queues, self.schedule.cycle_shifts[key])
                continue
            upstream = route.nodes[a - 1]
            pair = (upstream, downstream)
            if pair not in table.mappings:
                inbound = self.graph.link(upstream, node)
                delta = self.graph.offset(inbound)
                table.mappings[pair] = {}
                for x in range(time.n_dip):
                    y = vartheta_dip_to_dip(x, inbound, time, delta)
                    table.mappings[pair][x] = (y, y % out.queues)
        return table

    def compile_pifo(self, node: str) -> PifoProgram:
        if self.graph.kind(node) != NodeKind.TAS_EDGE_SWITCH:
            raise ConfigurationError(f"{node} is not a TAS edge switch")
        time = self.graph.time
        program = PifoProgram(node)
        ranks = set()
        for key, a in self._hops(node):
            route = self.schedule.routes[key[0]]
            if a != route.m + 1:
                continue
            inbound = route.link_at(self.graph, route.m)
            cycle = self.timelines[key].cycles[-1] % time.n_dip
            extra = self.schedule.extra_delays[key]
            rank = (theta_dip_to_tas(cycle, inbound, time, self.graph.offset(inbound)) + extra) % time.t_ct
            port = route.nodes[a + 1]
            if (port, rank) in ranks:
                raise PifoCompileError(f"{node} -> {port}: two packets share rank {rank}")
            ranks.add((port, rank))
            program.entries.append(PifoEntry(key, port, cycle, extra, rank))
        program.entries.sort(key=lambda e: (e.port, e.rank))
        return program

    def compile_node(self, node: str) -> DeviceProgram:
        kind = self.graph.kind(node)
        program = DeviceProgram(node, kind)
        for app_id in self.schedule.accepted:
            route = self.schedule.routes.get(app_id)
            if route and node in route.nodes[:-1]:
                program.forwarding[app_id] = route.nodes[route.nodes.index(node) + 1]
        if kind.is_tas_side:
            for port in sorted(set(program.forwarding.values())):
                program.gcls[port] = self.compile_gcl(node, port)
        if kind.is_dip:
            program.dip_table = self.compile_dip_table(node)
        if kind == NodeKind.TAS_EDGE_SWITCH:
            program.pifo = self.compile_pifo(node)
        return program

    def compile_all(self) -> Dict[str, DeviceProgram]:
        programs = {node: self.compile_node(node) for node in sorted(self.graph.nodes)}
        logger.info("compiled programs for %d devices", len(programs))
        return programs


def _fifo_compatible(s1: int, l1: int, s2: int, l2: int, period: int) -> bool:
    """Two cyclic residences may share a FIFO queue if they are disjoint or leave in arrival order"""
    if l1 + l2 > period:
        return False
    x = (s1 - s2) % period
    if x == 0:
        return False
    if x < l2:
        # new packet arrives while the resident waits
        return x + l1 > l2
    if x + l1 > period:
        # resident arrives while the new packet waits
        return period + l2 > x + l1
    return True


def compile_gcl(schedule: Schedule, graph: NetworkGraph, node: str, apps: Iterable[Application],
                port: Optional[str] = None) -> GateControlList:
    return DeviceCompiler(schedule, graph, apps).compile_gcl(node, port)


def compile_dip_table(schedule: Schedule, graph: NetworkGraph, node: str,
                      apps: Iterable[Application]) -> DipCycleTable:
    return DeviceCompiler(schedule, graph, apps).compile_dip_table(node)


def compile_pifo(schedule: Schedule, graph: NetworkGraph, node: str, apps: Iterable[Application]) -> PifoProgram:
    return DeviceCompiler(schedule, graph, apps).compile_pifo(node)


def compile_all(schedule: Schedule, graph: NetworkGraph, apps: Iterable[Application]) -> Dict[str, DeviceProgram]:
    return DeviceCompiler(schedule, graph, apps).compile_all()
