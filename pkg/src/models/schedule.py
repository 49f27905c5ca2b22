"""
Schedule model: routes, the five decision-variable families, solver settings
and validation reports
"""

from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .network import Link, NetworkGraph, NodeKind
from .traffic import PacketKey, key_from_str, key_to_str
from ..utils.errors import ConfigurationError, RouteError, ScenarioFormatError


@dataclass(frozen=True)
class Route:
    """Node sequence v_0..v_n; v_k is the ingress TAS edge, v_m the last DIP node"""
    nodes: Tuple[str, ...]
    k: int
    m: int

    @property
    def n(self) -> int:
        return len(self.nodes) - 1

    @classmethod
    def from_nodes(cls, nodes: Sequence[str], graph: NetworkGraph) -> 'Route':
        nodes = tuple(nodes)
        if len(set(nodes)) != len(nodes):
            raise RouteError(f"route {nodes} repeats a node")
        for node in nodes:
            if node not in graph.nodes:
                raise RouteError(f"route {nodes} uses unknown node {node!r}")
        for a, b in zip(nodes, nodes[1:]):
            if (a, b) not in graph.links:
                raise RouteError(f"route {nodes} uses missing link {a} -> {b}")
        kinds = [graph.kind(v) for v in nodes]
        if len(nodes) < 5 or kinds[0] != NodeKind.SOURCE_HOST or kinds[-1] != NodeKind.DEST_HOST:
            raise RouteError(f"route {nodes} must run from a source host to a destination host through the core")

        i = 1
        while kinds[i] == NodeKind.TAS_SWITCH:
            i += 1
        if kinds[i] != NodeKind.TAS_EDGE_SWITCH:
            raise RouteError(f"route {nodes}: expected a TAS edge switch at position {i}")
        k = i
        i += 1
        if kinds[i] != NodeKind.DIP_EDGE_ROUTER:
            raise RouteError(f"route {nodes}: core segment must start at a DIP edge router")
        while i + 1 < len(nodes) and kinds[i + 1].is_dip:
            i += 1
        m = i
        if kinds[m] != NodeKind.DIP_EDGE_ROUTER:
            raise RouteError(f"route {nodes}: core segment must end at a DIP edge router")
        if m + 1 >= len(nodes) - 1 or kinds[m + 1] != NodeKind.TAS_EDGE_SWITCH:
            raise RouteError(f"route {nodes}: expected a TAS edge switch after the core")
        if any(kind != NodeKind.TAS_SWITCH for kind in kinds[m + 2:-1]):
            raise RouteError(f"route {nodes}: egress access segment may only contain TAS switches")
        return cls(nodes, k, m)

    def links(self, graph: NetworkGraph) -> List[Link]:
        return [graph.link(a, b) for a, b in zip(self.nodes, self.nodes[1:])]

    def link_at(self, graph: NetworkGraph, a: int) -> Link:
        """Link l_a = (v_a, v_{a+1})"""
        return graph.link(self.nodes[a], self.nodes[a + 1])

    def tas_ingress_links(self, graph: NetworkGraph) -> List[Link]:
        """Links l_0..l_k, driven by gate control lists"""
        return self.links(graph)[:self.k + 1]

    def dip_links(self, graph: NetworkGraph) -> List[Link]:
        """Links l_{k+1}..l_m, sourced at DIP routers"""
        return self.links(graph)[self.k + 1:self.m + 1]

    def egress_tas_links(self, graph: NetworkGraph) -> List[Link]:
        return self.links(graph)[self.m + 1:]

    @property
    def dip_nodes(self) -> Tuple[str, ...]:
        return self.nodes[self.k + 1:self.m + 1]

    def as_list(self) -> List[str]:
        return list(self.nodes)


@dataclass
class Schedule:
    """Admission flags, routes, source offsets, cycle shifts and extra delays"""
    admission: Dict[str, bool] = field(default_factory=dict)
    routes: Dict[str, Route] = field(default_factory=dict)
    src_offsets: Dict[PacketKey, int] = field(default_factory=dict)
    cycle_shifts: Dict[PacketKey, int] = field(default_factory=dict)
    extra_delays: Dict[PacketKey, int] = field(default_factory=dict)
    timed_out: bool = False

    @property
    def accepted(self) -> List[str]:
        return sorted(app_id for app_id, ok in self.admission.items() if ok)

    @property
    def objective(self) -> int:
        return len(self.accepted)

    def copy(self) -> 'Schedule':
        return Schedule(dict(self.admission), dict(self.routes), dict(self.src_offsets),
                        dict(self.cycle_shifts), dict(self.extra_delays), self.timed_out)

    def drop(self, app_id: str) -> None:
        """Reject an application and forget its variables"""
        self.admission[app_id] = False
        self.routes.pop(app_id, None)
        for table in (self.src_offsets, self.cycle_shifts, self.extra_delays):
            for key in [k for k in table if k[0] == app_id]:
                del table[key]

    def to_dict(self) -> Dict[str, Any]:
        def packet_table(table: Dict[PacketKey, int]) -> Dict[str, int]:
            return {key_to_str(k): table[k] for k in sorted(table)}

        return {
            'admission': {a: int(self.admission[a]) for a in sorted(self.admission)},
            'routes': {a: self.routes[a].as_list() for a in sorted(self.routes)},
            'src_offsets_ns': packet_table(self.src_offsets),
            'cycle_shifts': packet_table(self.cycle_shifts),
            'extra_delays_ns': packet_table(self.extra_delays),
            'timed_out': self.timed_out,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any], graph: NetworkGraph) -> 'Schedule':
        """Schedule from its JSON form; a malformed field raises ScenarioFormatError naming it"""
        if not isinstance(data, dict):
            raise ScenarioFormatError('schedule must be an object')

        def table(name: str) -> Dict[str, Any]:
            value = data.get(name, {})
            if not isinstance(value, dict):
                raise ScenarioFormatError(f"{name} must be an object")
            return value

        def packet_table(name: str) -> Dict[PacketKey, int]:
            try:
                return {key_from_str(k): int(v) for k, v in table(name).items()}
            except ScenarioFormatError:
                raise
            except (ConfigurationError, TypeError, ValueError) as e:
                raise ScenarioFormatError(f"{name}: {e}") from None

        routes = {}
        for app_id, nodes in table('routes').items():
            if not isinstance(nodes, list):
                raise ScenarioFormatError(f"routes.{app_id} must be a list of node ids")
            routes[app_id] = Route.from_nodes(nodes, graph)
        return cls(
            admission={a: bool(v) for a, v in table('admission').items()},
            routes=routes,
            src_offsets=packet_table('src_offsets_ns'),
            cycle_shifts=packet_table('cycle_shifts'),
            extra_delays=packet_table('extra_delays_ns'),
            timed_out=bool(data.get('timed_out', False)),
        )


class SolverMode(str, Enum):
    EXHAUSTIVE = 'exhaustive'
    GREEDY = 'greedy'
    GENETIC = 'genetic'


class Policy(str, Enum):
    FULL = 'full'
    NO_SHAPING = 'no-shaping'
    NO_ROUTE = 'no-route'


@dataclass(frozen=True)
class SolverConfig:
    mode: SolverMode = SolverMode.GREEDY
    policy: Policy = Policy.FULL
    offset_granularity: Optional[int] = None
    k_routes: int = 3
    population: int = 40
    generations: int = 60
    mutation_rate: float = 0.2
    crossover_rate: float = 0.6
    seed: int = 0
    time_budget: float = 60.0
    exhaustive_max_apps: int = 6
    exhaustive_max_space: float = 1e7

    def granularity(self, graph: NetworkGraph) -> int:
        """Offset step; defaults to one DIP cycle and must divide it"""
        step = self.offset_granularity or graph.time.t_dip
        if step <= 0 or graph.time.t_dip % step != 0:
            raise ConfigurationError(f"offset granularity {step} ns must divide t_dip {graph.time.t_dip} ns")
        return step

    def routes_per_app(self) -> int:
        if self.k_routes < 1:
            raise ConfigurationError("k_routes must be at least 1")
        return 1 if self.policy == Policy.NO_ROUTE else self.k_routes

    def with_overrides(self, **overrides: Any) -> 'SolverConfig':
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigurationError(f"unknown solver settings: {', '.join(sorted(unknown))}")
        try:
            if 'mode' in overrides:
                overrides['mode'] = SolverMode(overrides['mode'])
            if 'policy' in overrides:
                overrides['policy'] = Policy(overrides['policy'])
        except ValueError as e:
            raise ConfigurationError(str(e)) from None
        return replace(self, **overrides)


class ViolationKind(str, Enum):
    CONFLICT = 'Conflict'
    CAPACITY = 'Capacity'
    DEADLINE = 'Deadline'
    DOMAIN = 'Domain'


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    entities: Tuple[str, ...]
    slack: int
    detail: str = ''

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'entities': list(self.entities), 'slack': self.slack, 'detail': self.detail}


@dataclass
class ViolationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def of_kind(self, kind: ViolationKind) -> List[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def offending_apps(self) -> Dict[str, int]:
        """Number of violations each application takes part in"""
        counts: Dict[str, int] = {}
        for violation in self.violations:
            for app_id in sorted({e[4:] for e in violation.entities if e.startswith('app=')}):
                counts[app_id] = counts.get(app_id, 0) + 1
        return counts

    def to_dict(self) -> Dict[str, Any]:
        return {
            'feasible': self.feasible,
            'count': len(self.violations),
            'violations': [v.to_dict() for v in self.violations],
        }
