"""
Discrete-event simulator for compiled device programs

Scheduled packets follow the gate control lists, DIP cycle tables and PIFO
ranks of the device programs. Interference (and, in best-effort mode, all
traffic) uses drop-tail FIFO queues that only get the link when no
scheduled transmission can be disturbed. Every transmission is
store-and-forward.
"""

import heapq
import logging
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from itertools import count
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .interference import CbrFlow, InterferenceProfile
from ..engine.device_compiler import DeviceProgram, GateControlEntry, GateControlList
from ..models.network import Link, NetworkGraph, NodeKind, ceil_div
from ..models.schedule import Route
from ..models.traffic import Application, PacketKey, fragment, message_offset
from ..utils.errors import ConfigurationError, JitterUndefinedError, SimulationInvariantError

logger = logging.getLogger(__name__)

BE_QUEUE_CAPACITY = 256


class EventKind(IntEnum):
    """Value is the tie-break priority among events at the same instant"""
    GATE_CHANGE = 0
    CYCLE_BOUNDARY = 1
    PACKET_ARRIVAL = 2
    TRANSMIT_COMPLETE = 3


@dataclass(order=True)
class Event:
    time: int
    kind: EventKind
    seq: int
    payload: Any = field(compare=False, default=None)


@dataclass(eq=False)
class SimPacket:
    app_id: Optional[str]
    key: Optional[PacketKey]
    msg_index: int
    length: int
    created: int
    scheduled: bool
    dest: str
    cycle: Optional[int] = None
    upstream: Optional[str] = None
    release: Optional[int] = None

    @property
    def is_app(self) -> bool:
        return self.app_id is not None


@dataclass(frozen=True)
class PacketRecord:
    app_id: str
    msg_index: int
    pkt_index: int
    node: str
    arrival_ns: int
    departure_ns: int


@dataclass(frozen=True)
class MessageRecord:
    app_id: str
    msg_index: int
    arrival_ns: int
    completion_ns: int

    @property
    def e2e_delay(self) -> int:
        return self.completion_ns - self.arrival_ns


@dataclass
class SimTrace:
    packets: List[PacketRecord] = field(default_factory=list)
    messages: List[MessageRecord] = field(default_factory=list)
    drops: int = 0
    events: int = 0

    def delays(self, app_id: str) -> List[int]:
        return [m.e2e_delay for m in self.messages if m.app_id == app_id]

    def packet_frame(self) -> pd.DataFrame:
        columns = ['app_id', 'msg_index', 'pkt_index', 'node', 'arrival_ns', 'departure_ns']
        return pd.DataFrame([r.__dict__ for r in self.packets], columns=columns)

    def summary_frame(self) -> pd.DataFrame:
        rows = []
        for app_id in sorted({m.app_id for m in self.messages}):
            delays = np.array(self.delays(app_id), dtype=np.int64)
            rows.append({'app_id': app_id, 'n_messages': len(delays), 'min_delay_ns': int(delays.min()),
                         'max_delay_ns': int(delays.max()), 'jitter_ns': int(np.ptp(delays))})
        return pd.DataFrame(rows, columns=['app_id', 'n_messages', 'min_delay_ns', 'max_delay_ns', 'jitter_ns'])

    def write_csv(self, out_dir: Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        self.packet_frame().to_csv(out_dir / 'trace.csv', index=False)
        self.summary_frame().to_csv(out_dir / 'summary.csv', index=False)


def measure_jitter(trace: SimTrace, app_id: str) -> int:
    """Max minus min end-to-end delay over the completed messages of app_id"""
    delays = np.array(trace.delays(app_id), dtype=np.int64)
    if delays.size < 2:
        raise JitterUndefinedError(f"application {app_id!r} completed {delays.size} messages, need 2")
    return int(np.ptp(delays))


class OutputPort:
    """Egress port with a drop-tail best-effort FIFO"""

    def __init__(self, sim: 'Simulator', link: Link):
        self.sim = sim
        self.link = link
        self.epoch = sim.graph.node(link.src).epoch
        self.busy = False
        self.best_effort: deque = deque()
        self.kick_at: Optional[int] = None

    def offer_best_effort(self, packet: SimPacket) -> None:
        if len(self.best_effort) >= self.sim.be_capacity:
            self.sim.drop(packet)
            return
        self.best_effort.append(packet)
        self.try_transmit()

    def kick(self) -> None:
        """Let best-effort traffic compete after every same-instant arrival"""
        if self.kick_at != self.sim.now:
            self.kick_at = self.sim.now
            self.sim.push(self.sim.now, EventKind.TRANSMIT_COMPLETE, ('kick', self))

    def start(self, packet: SimPacket) -> None:
        sim = self.sim
        tx = self.link.tx_time(packet.length)
        self.busy = True
        sim.record_departure(self.link.src, packet)
        sim.push(sim.now + tx, EventKind.TRANSMIT_COMPLETE, ('done', self))
        sim.push(sim.now + tx + self.link.delay_ns, EventKind.PACKET_ARRIVAL, (self.link.dst, packet, self.link.src))

    def try_transmit(self, allow_best_effort: bool = False) -> None:
        raise NotImplementedError


class FifoPort(OutputPort):
    """Plain FIFO used in best-effort mode"""

    def enqueue(self, packet: SimPacket) -> None:
        self.offer_best_effort(packet)

    def try_transmit(self, allow_best_effort: bool = False) -> None:
        if not self.busy and self.best_effort:
            self.start(self.best_effort.popleft())


class TasPort(OutputPort):
    """Gated port of a host or TAS switch; egress edge ports hold a PIFO"""

    def __init__(self, sim: 'Simulator', link: Link, gcl: Optional[GateControlList], pifo: bool):
        super().__init__(sim, link)
        self.gcl = gcl
        self.pifo = pifo
        self.entries = sorted(gcl.entries, key=lambda e: e.offset) if gcl else []
        self.starts = [e.offset for e in self.entries]
        self.queue_of = {e.packet: e.queue for e in self.entries}
        self.queues: Dict[int, deque] = {q: deque() for q in range(1, link.queues + 1)}
        self.heap: List[Tuple[int, int, SimPacket]] = []
        self.window: Optional[Tuple[int, int, GateControlEntry]] = None

    def enqueue(self, packet: SimPacket) -> None:
        if self.pifo:
            heapq.heappush(self.heap, (packet.release, self.sim.next_seq(), packet))
        else:
            queue = self.queue_of.get(packet.key)
            if queue is None:
                raise SimulationInvariantError(f"{self.link.src}: no gate for packet {packet.key}")
            self.queues[queue].append(packet)
        self.try_transmit()

    def schedule_gates(self, h: int) -> None:
        t_ct = self.sim.graph.time.t_ct
        for entry in self.entries:
            start = self.epoch + h * t_ct + entry.offset
            if start >= 0:
                self.sim.push(start, EventKind.GATE_CHANGE, ('open', self, entry, start + entry.duration))
                self.sim.push(start + entry.duration, EventKind.GATE_CHANGE, ('close', self))

    def open_gate(self, entry: GateControlEntry, end: int) -> None:
        self.window = (self.sim.now, end, entry)
        self.try_transmit()

    def close_gate(self) -> None:
        if self.window and self.window[1] <= self.sim.now:
            self.window = None
        self.try_transmit()

    def next_opening(self) -> Optional[int]:
        if not self.starts:
            return None
        t_ct = self.sim.graph.time.t_ct
        local = (self.sim.now - self.epoch) % t_ct
        idx = bisect_left(self.starts, local)
        if idx < len(self.starts):
            return self.sim.now + self.starts[idx] - local
        return self.sim.now + t_ct - local + self.starts[0]

    def try_transmit(self, allow_best_effort: bool = False) -> None:
        if self.busy:
            return
        now = self.sim.now
        if self.window and now < self.window[1]:
            opened, end, entry = self.window
            if self.pifo:
                head = self.heap[0][2] if self.heap else None
                if head is not None and head.release < opened:
                    raise SimulationInvariantError(
                        f"{self.link.src}: packet {head.key} missed its release at {head.release}")
                if head is not None and head.release <= now and head.key == entry.packet:
                    heapq.heappop(self.heap)
                    self.start(head)
                return
            queue = self.queues[entry.queue]
            # windows of packets not emitted yet stay unused
            if queue and queue[0].key == entry.packet and now + self.link.tx_time(queue[0].length) <= end:
                self.start(queue.popleft())
            return
        if not self.best_effort:
            return
        if not allow_best_effort:
            self.kick()
            return
        opening = self.next_opening()
        if opening is None or now + self.link.tx_time(self.best_effort[0].length) <= opening:
            self.start(self.best_effort.popleft())


class DipPort(OutputPort):
    """Cyclic queues of a DIP router port, keyed by absolute local cycle"""

    def __init__(self, sim: 'Simulator', link: Link):
        super().__init__(sim, link)
        self.cycles: Dict[int, deque] = {}
        self.t_dip = sim.graph.time.t_dip
        self.wake_at: Optional[int] = None

    def current_cycle(self) -> int:
        return (self.sim.now - self.epoch) // self.t_dip

    def cycle_start(self, cycle: int) -> int:
        return self.epoch + cycle * self.t_dip

    def enqueue(self, packet: SimPacket) -> None:
        cycle = packet.cycle
        current = self.current_cycle()
        start = self.cycle_start(cycle)
        if start < self.sim.now and cycle < current:
            raise SimulationInvariantError(
                f"{self.link.src}: packet {packet.key} assigned to past cycle {cycle}")
        if cycle not in self.cycles:
            if len(self.cycles) >= self.link.queues:
                raise SimulationInvariantError(
                    f"{self.link.src} -> {self.link.dst}: more than {self.link.queues} cycle queues pending")
            self.cycles[cycle] = deque()
            if start > self.sim.now:
                self.sim.push(start, EventKind.CYCLE_BOUNDARY, self)
        self.cycles[cycle].append(packet)
        self.try_transmit()

    def try_transmit(self, allow_best_effort: bool = False) -> None:
        if self.busy:
            return
        now = self.sim.now
        cycle = self.current_cycle()
        end = self.cycle_start(cycle + 1)
        stale = [c for c in self.cycles if c < cycle]
        if stale:
            raise SimulationInvariantError(f"{self.link.src}: cycle {stale[0]} ended with packets queued")
        queue = self.cycles.get(cycle)
        if queue:
            packet = queue.popleft()
            if not queue:
                del self.cycles[cycle]
            if now + self.link.tx_time(packet.length) > end:
                raise SimulationInvariantError(f"{self.link.src}: packet {packet.key} overruns cycle {cycle}")
            self.start(packet)
            return
        if not self.best_effort:
            return
        if not allow_best_effort:
            self.kick()
            return
        if now + self.link.tx_time(self.best_effort[0].length) <= end:
            self.start(self.best_effort.popleft())
        elif self.wake_at != end:
            self.wake_at = end
            self.sim.push(end, EventKind.CYCLE_BOUNDARY, self)


class Simulator:
    """Single-threaded event loop shared by the scheduled and best-effort modes"""

    def __init__(self, graph: NetworkGraph, apps: Sequence[Application], horizon: int,
                 interference: Optional[InterferenceProfile] = None,
                 programs: Optional[Dict[str, DeviceProgram]] = None,
                 routes: Optional[Dict[str, Route]] = None,
                 be_capacity: int = BE_QUEUE_CAPACITY):
        if horizon < 1:
            raise ConfigurationError(f"horizon must be at least one hypercycle, got {horizon}")
        self.graph = graph
        self.apps = {app.id: app for app in apps}
        self.horizon = horizon
        self.interference = interference or InterferenceProfile()
        self.programs = programs
        self.routes = routes or {}
        self.be_capacity = be_capacity
        self.scheduled = programs is not None
        self.trace = SimTrace()
        self.now = 0
        self._heap: List[Event] = []
        self._seq = count()
        self._pending_emissions = 0
        self._in_flight = 0
        self._messages: Dict[Tuple[str, int], List[int]] = {}
        self.ports: Dict[Tuple[str, str], OutputPort] = {}
        self._build_ports()

    def next_seq(self) -> int:
        return next(self._seq)

    def push(self, time: int, kind: EventKind, payload: Any) -> None:
        heapq.heappush(self._heap, Event(time, kind, self.next_seq(), payload))

    @property
    def active(self) -> bool:
        return self._pending_emissions > 0 or self._in_flight > 0

    def _build_ports(self) -> None:
        for key, link in sorted(self.graph.links.items()):
            src_kind = self.graph.kind(link.src)
            if not self.scheduled:
                self.ports[key] = FifoPort(self, link)
            elif src_kind.is_dip:
                self.ports[key] = DipPort(self, link)
            elif src_kind.is_tas_side:
                program = self.programs.get(link.src)
                gcl = program.gcls.get(link.dst) if program else None
                pifo = src_kind == NodeKind.TAS_EDGE_SWITCH and not self.graph.kind(link.dst).is_dip
                self.ports[key] = TasPort(self, link, gcl, pifo)

    def _seed_events(self) -> None:
        t_ct = self.graph.time.t_ct
        for app_id in sorted(self.apps):
            app = self.apps[app_id]
            if self.scheduled:
                if not any(app_id in p.forwarding for p in self.programs.values()):
                    continue
            elif app_id not in self.routes:
                continue
            epoch = self.graph.node(app.src).epoch
            packets = fragment(app, self.graph.time)
            n_messages = app.n_messages(self.graph.time)
            for h in range(self.horizon):
                for packet in packets:
                    created = epoch + h * t_ct + message_offset(app, packet.msg_index, self.graph.time)
                    msg_index = h * n_messages + packet.msg_index
                    sim_packet = SimPacket(app_id, packet.key, msg_index, packet.length, created,
                                           self.scheduled, app.dest)
                    self._pending_emissions += 1
                    self.push(created, EventKind.PACKET_ARRIVAL, (app.src, sim_packet, None))
        for flow in self.interference.flows:
            if flow.link not in self.ports:
                raise ConfigurationError(f"interference flow on unknown link {flow.link}")
            self.push(flow.phase, EventKind.PACKET_ARRIVAL, ('emit', flow))
        if self.scheduled:
            for port in self.ports.values():
                if isinstance(port, TasPort) and port.entries:
                    port.schedule_gates(-1)
                    port.schedule_gates(0)
                    self.push(port.epoch, EventKind.GATE_CHANGE, ('refill', port, 1))

    def record_departure(self, node: str, packet: SimPacket) -> None:
        if packet.is_app:
            arrivals = self._arrivals.pop((id(packet), node))
            self.trace.packets.append(PacketRecord(packet.app_id, packet.msg_index, packet.key[2], node,
                                                   arrivals, self.now))

    def drop(self, packet: SimPacket) -> None:
        self.trace.drops += 1
        if packet.is_app:
            if packet.scheduled:
                raise SimulationInvariantError(f"scheduled packet {packet.key} dropped")
            self._in_flight -= 1

    def _emit_interference(self, flow: CbrFlow) -> None:
        src, dst = flow.link
        packet = SimPacket(None, None, 0, flow.packet_size, self.now, False, dst)
        self.ports[flow.link].offer_best_effort(packet)
        self.push(self.now + flow.interval, EventKind.PACKET_ARRIVAL, ('emit', flow))

    def _arrive(self, node: str, packet: SimPacket, upstream: Optional[str]) -> None:
        if not packet.is_app:
            return
        if upstream is None:
            self._pending_emissions -= 1
            self._in_flight += 1
            self._messages.setdefault((packet.app_id, packet.msg_index), [])
        if node == packet.dest:
            self._in_flight -= 1
            self.trace.packets.append(PacketRecord(packet.app_id, packet.msg_index, packet.key[2], node,
                                                   self.now, self.now))
            self._complete(packet)
            return
        self._arrivals[(id(packet), node)] = self.now
        next_hop = self._next_hop(node, packet)
        port = self.ports[(node, next_hop)]
        if not self.scheduled:
            port.enqueue(packet)
            return
        kind = self.graph.kind(node)
        if kind.is_dip:
            packet.cycle = self._dip_cycle(node, packet, upstream, next_hop)
            packet.upstream = node
        elif kind == NodeKind.TAS_EDGE_SWITCH and isinstance(port, TasPort) and port.pifo:
            packet.release = self._release(node, packet, upstream, next_hop)
        port.enqueue(packet)

    def _next_hop(self, node: str, packet: SimPacket) -> str:
        if self.scheduled:
            return self.programs[node].forwarding[packet.app_id]
        nodes = self.routes[packet.app_id].nodes
        return nodes[nodes.index(node) + 1]

    def _dip_cycle(self, node: str, packet: SimPacket, upstream: str, next_hop: str) -> int:
        time = self.graph.time
        table = self.programs[node].dip_table
        ready = ceil_div(self.now - self.graph.node(node).epoch, time.t_dip)
        if not self.graph.kind(upstream).is_dip:
            cycle, _, shift = table.edge_entries[packet.key]
            absolute = ready + shift
            if absolute % time.n_dip != cycle:
                raise SimulationInvariantError(
                    f"{node}: packet {packet.key} maps to cycle {absolute % time.n_dip}, table says {cycle}")
            return absolute
        target, _ = table.lookup(upstream, next_hop, packet.cycle % time.n_dip)
        return ready + (target - ready) % time.n_dip

    def _release(self, node: str, packet: SimPacket, upstream: str, next_hop: str) -> int:
        """Absolute departure time at the egress TAS edge switch"""
        time = self.graph.time
        inbound = self.graph.link(upstream, node)
        dip_epoch = self.graph.node(upstream).epoch
        cycle = ceil_div(self.now - inbound.delay_ns - dip_epoch, time.t_dip) - 1
        entry = next(e for e in self.programs[node].pifo.entries if e.packet == packet.key)
        release = dip_epoch + (cycle + 1) * time.t_dip + inbound.delay_ns + entry.extra_delay
        if (release - self.graph.node(node).epoch) % time.t_ct != entry.rank:
            raise SimulationInvariantError(f"{node}: packet {packet.key} released off its rank {entry.rank}")
        return release

    def _complete(self, packet: SimPacket) -> None:
        app = self.apps[packet.app_id]
        arrivals = self._messages[(packet.app_id, packet.msg_index)]
        arrivals.append(self.now)
        if len(arrivals) == app.n_packets():
            del self._messages[(packet.app_id, packet.msg_index)]
            self.trace.messages.append(MessageRecord(packet.app_id, packet.msg_index, packet.created, max(arrivals)))

    def _dispatch(self, event: Event) -> None:
        payload = event.payload
        if event.kind == EventKind.PACKET_ARRIVAL:
            if payload[0] == 'emit':
                self._emit_interference(payload[1])
            else:
                self._arrive(*payload)
        elif event.kind == EventKind.GATE_CHANGE:
            action, port = payload[0], payload[1]
            if action == 'open':
                port.open_gate(payload[2], payload[3])
            elif action == 'close':
                port.close_gate()
            else:
                port.schedule_gates(payload[2])
                self.push(port.epoch + payload[2] * self.graph.time.t_ct, EventKind.GATE_CHANGE,
                          ('refill', port, payload[2] + 1))
        elif event.kind == EventKind.CYCLE_BOUNDARY:
            payload.try_transmit()
        else:
            action, port = payload
            if action == 'done':
                port.busy = False
                port.try_transmit()
            else:
                port.kick_at = None
                port.try_transmit(allow_best_effort=True)

    def run(self) -> SimTrace:
        self._arrivals: Dict[Tuple[int, str], int] = {}
        self._seed_events()
        t_ct = self.graph.time.t_ct
        limit = (self.horizon + 2) * t_ct + 2 * max((a.e2e for a in self.apps.values()), default=0) + t_ct
        while self._heap and self.active:
            event = heapq.heappop(self._heap)
            if event.time > limit:
                if self.scheduled:
                    raise SimulationInvariantError(f"{self._in_flight} scheduled packets still in flight")
                logger.warning("stopping with %d best-effort application packets in flight", self._in_flight)
                self.trace.drops += self._in_flight
                break
            self.now = event.time
            self.trace.events += 1
            self._dispatch(event)
        if self.scheduled and self._in_flight:
            raise SimulationInvariantError(f"{self._in_flight} scheduled packets never arrived")
        logger.info("simulated %d events: %d messages delivered, %d drops",
                    self.trace.events, len(self.trace.messages), self.trace.drops)
        return self.trace


def run(graph: NetworkGraph, programs: Dict[str, DeviceProgram], apps: Sequence[Application],
        interference: Optional[InterferenceProfile] = None, horizon: int = 1,
        be_capacity: int = BE_QUEUE_CAPACITY) -> SimTrace:
    """Simulate scheduled traffic under the compiled device programs"""
    return Simulator(graph, apps, horizon, interference, programs=programs, be_capacity=be_capacity).run()


def run_best_effort(graph: NetworkGraph, apps: Sequence[Application], routes: Dict[str, Route],
                    interference: Optional[InterferenceProfile] = None, horizon: int = 1,
                    be_capacity: int = BE_QUEUE_CAPACITY) -> SimTrace:
    """Same traffic without gating: packets leave at message arrival through FIFO queues"""
    return Simulator(graph, apps, horizon, interference, routes=routes, be_capacity=be_capacity).run()
