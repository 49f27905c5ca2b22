"""
Schedule validator: TAS conflicts, DIP cycle capacity, variable domains and deadlines
"""

import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Tuple

from .cycle_map import PacketTimeline, ScheduleEntry, packet_timeline
from ..models.network import NS_PER_SECOND, Link, NetworkGraph
from ..models.schedule import Schedule, Violation, ViolationKind, ViolationReport
from ..models.traffic import Application, Packet, PacketKey, fragment, key_to_str, message_offset

logger = logging.getLogger(__name__)


def _link_name(link: Link) -> str:
    return f"link={link.src}->{link.dst}"


class ScheduleValidator:
    """Checks a candidate schedule against every transmission constraint"""

    def __init__(self, graph: NetworkGraph, apps: Iterable[Application]):
        self.graph = graph
        self.apps: Dict[str, Application] = {app.id: app for app in apps}
        self._packets = {app_id: fragment(app, graph.time) for app_id, app in self.apps.items()}

    def packets(self, app_id: str) -> List[Packet]:
        return self._packets[app_id]

    def entry(self, schedule: Schedule, key: PacketKey) -> ScheduleEntry:
        return ScheduleEntry(schedule.src_offsets.get(key), schedule.cycle_shifts.get(key),
                             schedule.extra_delays.get(key))

    def timelines(self, schedule: Schedule) -> Dict[PacketKey, PacketTimeline]:
        """Timelines of every fully bound packet of the accepted applications"""
        result = {}
        for app_id in schedule.accepted:
            if app_id not in self.apps or app_id not in schedule.routes:
                continue
            route = schedule.routes[app_id]
            for packet in self._packets[app_id]:
                entry = self.entry(schedule, packet.key)
                if None in (entry.phi_v0, entry.r, entry.extra_delay):
                    continue
                offset = message_offset(self.apps[app_id], packet.msg_index, self.graph.time)
                result[packet.key] = packet_timeline(packet, route, entry, self.graph, offset)
        return result

    def check_domains(self, schedule: Schedule) -> List[Violation]:
        """Bound variables and value ranges; the source offset keeps its window inside the cycle"""
        violations = []
        t_ct = self.graph.time.t_ct
        for app_id in schedule.accepted:
            if app_id not in self.apps:
                violations.append(Violation(ViolationKind.DOMAIN, (f"app={app_id}",), 0, 'unknown application'))
                continue
            route = schedule.routes.get(app_id)
            if route is None:
                violations.append(Violation(ViolationKind.DOMAIN, (f"app={app_id}",), 0, 'accepted without route'))
                continue
            app = self.apps[app_id]
            if route.nodes[0] != app.src or route.nodes[-1] != app.dest:
                violations.append(Violation(ViolationKind.DOMAIN, (f"app={app_id}",), 0,
                                            'route endpoints differ from application'))
            first = route.link_at(self.graph, 0)
            shift_link = route.link_at(self.graph, route.k + 1)
            for packet in self._packets[app_id]:
                key = packet.key
                ents = (f"app={app_id}", f"packet={key_to_str(key)}")
                entry = self.entry(schedule, key)
                if None in (entry.phi_v0, entry.r, entry.extra_delay):
                    violations.append(Violation(ViolationKind.DOMAIN, ents, 0, 'unbound decision variable'))
                    continue
                limit = t_ct - first.tx_time(packet.length)
                if not 0 <= entry.phi_v0 <= limit:
                    violations.append(Violation(ViolationKind.DOMAIN, ents, entry.phi_v0 - limit,
                                                'source offset out of range'))
                if not 0 <= entry.r <= shift_link.queues - 2:
                    violations.append(Violation(ViolationKind.DOMAIN, ents, entry.r - (shift_link.queues - 2),
                                                'cycle shift out of range'))
                if not 0 <= entry.extra_delay < t_ct:
                    violations.append(Violation(ViolationKind.DOMAIN, ents, entry.extra_delay - t_ct + 1,
                                                'extra delay out of range'))
        return violations

    def _packet_length(self, key: PacketKey) -> int:
        app = self.apps[key[0]]
        return app.mtu if key[2] < app.n_packets() else app.msg_len - (app.n_packets() - 1) * app.mtu

    def link_windows(self, schedule: Schedule) -> Dict[Tuple[str, str], List[Tuple[int, int, PacketKey]]]:
        """(offset, tx_time, packet) per TAS-sourced link"""
        windows = defaultdict(list)
        for key, timeline in self.timelines(schedule).items():
            route = schedule.routes[key[0]]
            length = self._packet_length(key)
            for a, node in enumerate(route.nodes[:-1]):
                if node in timeline.offsets:
                    link = route.link_at(self.graph, a)
                    windows[link.key].append((timeline.offsets[node], link.tx_time(length), key))
        return windows

    def check_conflicts(self, schedule: Schedule) -> List[Violation]:
        """No two packets may overlap on a link leaving a host or TAS switch"""
        t_ct = self.graph.time.t_ct
        violations = []
        for link_key, items in sorted(self.link_windows(schedule).items()):
            link = self.graph.links[link_key]
            items = sorted(items)
            count = len(items)
            extended = items + [(off + t_ct, tx, key) for off, tx, key in items]
            seen = set()
            for i, (off, tx, key) in enumerate(items):
                j = i + 1
                while j < i + count and extended[j][0] < off + tx:
                    other = extended[j][2]
                    pair = tuple(sorted((key, other)))
                    if pair not in seen:
                        seen.add(pair)
                        violations.append(Violation(
                            ViolationKind.CONFLICT,
                            (f"app={pair[0][0]}", f"app={pair[1][0]}", f"packet={key_to_str(pair[0])}",
                             f"packet={key_to_str(pair[1])}", _link_name(link)),
                            off + tx - extended[j][0], 'overlapping transmission windows'))
                    j += 1
        return violations

    def cycle_loads(self, schedule: Schedule) -> Dict[Tuple[Tuple[str, str], int], List[PacketKey]]:
        """Packets per (DIP-sourced link, cycle index)"""
        loads = defaultdict(list)
        n_dip = self.graph.time.n_dip
        for key, timeline in self.timelines(schedule).items():
            route = schedule.routes[key[0]]
            for link, cycle in zip(route.dip_links(self.graph), timeline.cycles):
                loads[(link.key, cycle % n_dip)].append(key)
        return loads

    def check_capacity(self, schedule: Schedule) -> List[Violation]:
        """Packets assigned to one DIP cycle must fit into it"""
        t_dip = self.graph.time.t_dip
        violations = []
        for (link_key, cycle), keys in sorted(self.cycle_loads(schedule).items()):
            link = self.graph.links[link_key]
            lengths = [self._packet_length(k) for k in keys]
            bits = 8 * sum(lengths) * NS_PER_SECOND
            busy = sum(link.tx_time(length) for length in lengths)
            if bits > link.cycle_capacity_bits(t_dip) or busy > t_dip:
                capacity_bytes = t_dip * link.bw_bps // (8 * NS_PER_SECOND)
                apps = sorted({f"app={k[0]}" for k in keys})
                violations.append(Violation(
                    ViolationKind.CAPACITY, tuple(apps) + (_link_name(link), f"cycle={cycle}"),
                    max(sum(lengths) - capacity_bytes, 1), 'DIP cycle capacity exceeded'))
        return violations

    def app_delays(self, schedule: Schedule) -> Dict[str, int]:
        """Application-level delay: the worst packet delay over all messages"""
        delays: Dict[str, int] = {}
        for key, timeline in self.timelines(schedule).items():
            delays[key[0]] = max(delays.get(key[0], 0), timeline.delay)
        return delays

    def check_deadlines(self, schedule: Schedule) -> List[Violation]:
        violations = []
        for app_id, delay in sorted(self.app_delays(schedule).items()):
            deadline = self.apps[app_id].e2e
            if delay > deadline:
                violations.append(Violation(ViolationKind.DEADLINE, (f"app={app_id}",), delay - deadline,
                                            f"delay {delay} ns exceeds deadline {deadline} ns"))
        return violations

    def validate(self, schedule: Schedule) -> ViolationReport:
        report = ViolationReport(self.check_domains(schedule) + self.check_conflicts(schedule)
                                 + self.check_capacity(schedule) + self.check_deadlines(schedule))
        logger.debug("validated %d accepted applications: %d violations", schedule.objective,
                     len(report.violations))
        return report


def validate(schedule: Schedule, graph: NetworkGraph, apps: Iterable[Application]) -> ViolationReport:
    return ScheduleValidator(graph, apps).validate(schedule)
