"""
Traffic model: periodic applications, their messages and packets
"""

import random
from dataclasses import dataclass, field, replace
from typing import Dict, List, Tuple

from .network import NetworkGraph, NodeKind, TimeConfig, ceil_div
from ..utils.errors import ConfigurationError

DEFAULT_MTU = 1500

PacketKey = Tuple[str, int, int]


def key_to_str(key: PacketKey) -> str:
    return f"{key[0]}:{key[1]}:{key[2]}"


def key_from_str(text: str) -> PacketKey:
    try:
        app_id, i, j = str(text).rsplit(':', 2)
        return (app_id, int(i), int(j))
    except ValueError:
        raise ConfigurationError(f"malformed packet key {text!r}, expected app:message:packet") from None


@dataclass(frozen=True)
class Application:
    """Periodic unicast application; phase is the arrival offset of its first message"""
    id: str
    src: str
    dest: str
    e2e: int
    msg_len: int
    period: int
    mtu: int = DEFAULT_MTU
    phase: int = 0

    def n_messages(self, time: TimeConfig) -> int:
        return time.t_ct // self.period

    def n_packets(self) -> int:
        return ceil_div(self.msg_len, self.mtu)

    def rate_bps(self) -> float:
        """Offered load in bits per second"""
        return self.msg_len * 8 * 1e9 / self.period


@dataclass(frozen=True)
class Message:
    app_id: str
    index: int
    arrival_offset: int


@dataclass(frozen=True)
class Packet:
    app_id: str
    msg_index: int
    pkt_index: int
    length: int
    per_hop_offsets: Dict[str, int] = field(default_factory=dict, compare=False, hash=False)

    @property
    def key(self) -> PacketKey:
        return (self.app_id, self.msg_index, self.pkt_index)

    def with_offsets(self, offsets: Dict[str, int]) -> 'Packet':
        return replace(self, per_hop_offsets=dict(offsets))


def check_application(app: Application, graph: NetworkGraph) -> None:
    """Raise ConfigurationError when the application does not fit the network"""
    time = graph.time
    if app.src not in graph.nodes or graph.kind(app.src) != NodeKind.SOURCE_HOST:
        raise ConfigurationError(f"application {app.id!r}: source {app.src!r} is not a source host")
    if app.dest not in graph.nodes or graph.kind(app.dest) != NodeKind.DEST_HOST:
        raise ConfigurationError(f"application {app.id!r}: destination {app.dest!r} is not a destination host")
    if app.msg_len <= 0 or app.e2e <= 0 or app.mtu <= 0:
        raise ConfigurationError(f"application {app.id!r}: message length, deadline and MTU must be positive")
    if app.period <= 0 or time.t_ct % app.period != 0:
        raise ConfigurationError(
            f"application {app.id!r}: cycle time {time.t_ct} ns is not a multiple of period {app.period} ns")
    if not 0 <= app.phase < time.t_ct:
        raise ConfigurationError(f"application {app.id!r}: phase must lie in [0, {time.t_ct})")


def messages(app: Application, time: TimeConfig) -> List[Message]:
    """Messages of one cycle time; message i arrives at phase + (i-1)*period mod t_ct"""
    return [
        Message(app.id, i, (app.phase + (i - 1) * app.period) % time.t_ct)
        for i in range(1, app.n_messages(time) + 1)
    ]


def message_offset(app: Application, msg_index: int, time: TimeConfig) -> int:
    return (app.phase + (msg_index - 1) * app.period) % time.t_ct


def fragment(app: Application, time: TimeConfig) -> List[Packet]:
    """Split every message of one cycle time into MTU-sized packets"""
    n_packets = app.n_packets()
    packets = []
    for i in range(1, app.n_messages(time) + 1):
        remaining = app.msg_len
        for j in range(1, n_packets + 1):
            length = min(app.mtu, remaining)
            remaining -= length
            packets.append(Packet(app.id, i, j, length))
    return packets


def draw_phases(apps: List[Application], time: TimeConfig, seed: int) -> List[Application]:
    """Assign reproducible random start offsets to applications"""
    rng = random.Random(seed)
    return [replace(app, phase=rng.randrange(app.period)) for app in apps]
