"""
Constant-bit-rate interference flows that load links through best-effort queues
"""

import random
from dataclasses import dataclass, field
from typing import Iterable, List, Tuple

from ..models.network import NS_PER_SECOND, NetworkGraph, ceil_div
from ..utils.errors import ConfigurationError

DEFAULT_PACKET_SIZE = 1500
DEFAULT_FLOW_SHARE = 0.05


@dataclass(frozen=True)
class CbrFlow:
    link: Tuple[str, str]
    rate_bps: float
    packet_size: int
    phase: int

    @property
    def interval(self) -> int:
        """Gap between two packets of the flow in ns"""
        return ceil_div(self.packet_size * 8 * NS_PER_SECOND, max(int(self.rate_bps), 1))


@dataclass(frozen=True)
class InterferenceProfile:
    flows: Tuple[CbrFlow, ...] = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self):
        for flow in self.flows:
            if flow.rate_bps < 0 or flow.packet_size <= 0 or flow.phase < 0:
                raise ConfigurationError(f"invalid interference flow on {flow.link}")

    def utilization(self, graph: NetworkGraph, link: Tuple[str, str]) -> float:
        """Offered interference load over link capacity"""
        rate = sum(f.packet_size * 8 * NS_PER_SECOND / f.interval for f in self.flows if f.link == link)
        return rate / graph.links[link].bw_bps

    def without(self) -> 'InterferenceProfile':
        return InterferenceProfile((), self.seed)


def uniform_interference(graph: NetworkGraph, links: Iterable[Tuple[str, str]], utilization: float,
                         seed: int = 0, packet_size: int = DEFAULT_PACKET_SIZE,
                         share: float = DEFAULT_FLOW_SHARE) -> InterferenceProfile:
    """Load every given link to `utilization` with flows of roughly `share` of its bandwidth each

    The flows of one link share a phase drawn from that link's own
    generator, so every interval opens with a burst of one packet per flow
    and the burst grows with the utilization.
    """
    if not 0 <= utilization < 1:
        raise ConfigurationError(f"utilization must lie in [0, 1), got {utilization}")
    flows: List[CbrFlow] = []
    if utilization == 0:
        return InterferenceProfile((), seed)
    count = max(1, round(utilization / share))
    for index, key in enumerate(sorted(links)):
        link = graph.links[key]
        rng = random.Random(seed * 1_000_003 + index)
        rate = utilization * link.bw_bps / count
        interval = ceil_div(packet_size * 8 * NS_PER_SECOND, max(int(rate), 1))
        phase = int(rng.random() * interval)
        flows.extend(CbrFlow(key, rate, packet_size, phase) for _ in range(count))
    return InterferenceProfile(tuple(flows), seed)
