"""
Scenario Loader
Reads and writes scenario JSON files (time configuration, topology, applications)
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from ..models.network import Link, NetworkGraph, Node, NodeKind, TimeConfig, build_graph
from ..models.schedule import SolverConfig
from ..models.traffic import DEFAULT_MTU, Application, check_application, draw_phases
from ..utils.errors import ConfigurationError, ScenarioFormatError

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {'time', 'nodes', 'links', 'applications', 'seed', 'solver', 'mtu_bytes'}
TIME_KEYS = {'t_ct_ns', 't_dip_ns'}
NODE_KEYS = {'id', 'kind', 'epoch_ns'}
LINK_KEYS = {'src', 'dst', 'bw_bps', 'delay_ns', 'queues'}
APP_KEYS = {'id', 'src', 'dest', 'e2e_ns', 'msg_len_bytes', 'period_ns', 'phase_ns'}


@dataclass
class Scenario:
    graph: NetworkGraph
    apps: List[Application]
    seed: int = 0
    solver: Dict[str, Any] = field(default_factory=dict)
    mtu: int = DEFAULT_MTU

    def solver_config(self, base: Optional[SolverConfig] = None) -> SolverConfig:
        """Base settings with the scenario's solver overrides applied"""
        return (base or SolverConfig()).with_overrides(**self.solver)

    def app(self, app_id: str) -> Application:
        for app in self.apps:
            if app.id == app_id:
                return app
        raise ConfigurationError(f"unknown application {app_id!r}")


def _check_keys(item: Dict[str, Any], allowed: set, required: set, where: str) -> None:
    if not isinstance(item, dict):
        raise ScenarioFormatError(f"{where} must be an object")
    unknown = set(item) - allowed
    if unknown:
        raise ScenarioFormatError(f"{where}: unknown fields {', '.join(sorted(unknown))}")
    missing = required - set(item)
    if missing:
        raise ScenarioFormatError(f"{where}: missing fields {', '.join(sorted(missing))}")


def _int(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioFormatError(f"{where} must be an integer, got {value!r}")
    return value


def _list(data: Dict[str, Any], name: str) -> List[Any]:
    if not isinstance(data[name], list):
        raise ScenarioFormatError(f"{name} must be a list")
    return data[name]


def scenario_from_dict(data: Dict[str, Any], default_mtu: int = DEFAULT_MTU) -> Scenario:
    """Scenario from its JSON form; default_mtu applies when the file names no mtu_bytes"""
    _check_keys(data, TOP_LEVEL_KEYS, {'time', 'nodes', 'links', 'applications'}, 'scenario')
    _check_keys(data['time'], TIME_KEYS, TIME_KEYS, 'time')
    time = TimeConfig.from_cycle_time(_int(data['time']['t_ct_ns'], 't_ct_ns'),
                                      _int(data['time']['t_dip_ns'], 't_dip_ns'))

    nodes = []
    for i, item in enumerate(_list(data, 'nodes')):
        _check_keys(item, NODE_KEYS, {'id', 'kind'}, f"nodes[{i}]")
        try:
            kind = NodeKind(item['kind'])
        except ValueError:
            raise ScenarioFormatError(f"nodes[{i}]: unknown node kind {item['kind']!r}") from None
        nodes.append(Node(str(item['id']), kind, _int(item.get('epoch_ns', 0), f"nodes[{i}].epoch_ns")))

    links = []
    for i, item in enumerate(_list(data, 'links')):
        _check_keys(item, LINK_KEYS, {'src', 'dst', 'bw_bps', 'delay_ns'}, f"links[{i}]")
        links.append(Link(str(item['src']), str(item['dst']), _int(item['bw_bps'], f"links[{i}].bw_bps"),
                          _int(item['delay_ns'], f"links[{i}].delay_ns"),
                          _int(item.get('queues', 8), f"links[{i}].queues")))
    graph = build_graph(nodes, links, time)

    seed = _int(data.get('seed', 0), 'seed')
    mtu = _int(data.get('mtu_bytes', default_mtu), 'mtu_bytes')
    apps, explicit = [], {}
    for i, item in enumerate(_list(data, 'applications')):
        _check_keys(item, APP_KEYS, APP_KEYS - {'phase_ns'}, f"applications[{i}]")
        app = Application(str(item['id']), str(item['src']), str(item['dest']),
                          _int(item['e2e_ns'], f"applications[{i}].e2e_ns"),
                          _int(item['msg_len_bytes'], f"applications[{i}].msg_len_bytes"),
                          _int(item['period_ns'], f"applications[{i}].period_ns"), mtu)
        if 'phase_ns' in item:
            explicit[app.id] = _int(item['phase_ns'], f"applications[{i}].phase_ns")
        apps.append(app)
    if len({a.id for a in apps}) != len(apps):
        raise ConfigurationError('duplicate application ids')

    # the period must be checked before a phase can be drawn from it
    for app in apps:
        check_application(app, graph)
    drawn = draw_phases(apps, time, seed)
    apps = [replace(app, phase=explicit[app.id]) if app.id in explicit else app for app in drawn]
    for app in apps:
        check_application(app, graph)

    solver = data.get('solver', {})
    if not isinstance(solver, dict):
        raise ScenarioFormatError('solver must be an object')
    SolverConfig().with_overrides(**solver)
    logger.debug("loaded scenario: %r, %d applications", graph, len(apps))
    return Scenario(graph, apps, seed, dict(solver), mtu)


def scenario_to_dict(scenario: Scenario) -> Dict[str, Any]:
    graph = scenario.graph
    data = {
        'time': {'t_ct_ns': graph.time.t_ct, 't_dip_ns': graph.time.t_dip},
        'nodes': [{'id': n.id, 'kind': n.kind.value, 'epoch_ns': n.epoch} for n in graph.nodes.values()],
        'links': [{'src': l.src, 'dst': l.dst, 'bw_bps': l.bw_bps, 'delay_ns': l.delay_ns, 'queues': l.queues}
                  for l in graph.links.values()],
        'applications': [{'id': a.id, 'src': a.src, 'dest': a.dest, 'e2e_ns': a.e2e, 'msg_len_bytes': a.msg_len,
                          'period_ns': a.period, 'phase_ns': a.phase} for a in scenario.apps],
        'seed': scenario.seed,
    }
    if scenario.solver:
        data['solver'] = dict(scenario.solver)
    if scenario.mtu != DEFAULT_MTU:
        data['mtu_bytes'] = scenario.mtu
    return data


class ScenarioLoader:
    """Loads scenarios from JSON files"""

    def __init__(self, path: Union[str, Path], default_mtu: int = DEFAULT_MTU):
        self.path = Path(path)
        self.default_mtu = default_mtu
        self.scenario: Optional[Scenario] = None

    def load(self) -> Scenario:
        if not self.path.exists():
            raise ConfigurationError(f"scenario file not found: {self.path}")
        text = self.path.read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioFormatError(f"{self.path}: {e.msg}", e.lineno, e.colno) from None
        self.scenario = scenario_from_dict(data, self.default_mtu)
        return self.scenario

    def get_scenario_stats(self) -> Dict[str, Any]:
        """Node kind counts, link count and offered load of the loaded scenario"""
        if self.scenario is None:
            self.load()
        graph = self.scenario.graph
        kinds = pd.Series([n.kind.value for n in graph.nodes.values()], dtype='object')
        return {
            'nodes': len(graph.nodes),
            'links': len(graph.links),
            'node_kinds': kinds.value_counts().sort_index().to_dict(),
            'applications': len(self.scenario.apps),
            'offered_load_bps': float(sum(a.rate_bps() for a in self.scenario.apps)),
        }


def load_scenario(path: Union[str, Path], default_mtu: int = DEFAULT_MTU) -> Scenario:
    return ScenarioLoader(path, default_mtu).load()


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(scenario_to_dict(scenario), indent=2) + '\n')
