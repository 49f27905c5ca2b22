"""
Admission-maximizing scheduler

Chooses admission, routes, source offsets, cycle shifts and extra delays so
that as many applications as possible are accepted. Offsets are explored on
a discrete grid (offset_granularity); the exhaustive mode is exact over that
grid, the greedy mode is a first-fit heuristic and the genetic mode lives in
genetic.py.
"""

import logging
import time as clock
from bisect import bisect_left, insort
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from .cycle_map import ScheduleEntry, packet_timeline, tas_offsets
from .routes import enumerate_routes
from .validator import ScheduleValidator
from ..models.network import NS_PER_SECOND, NetworkGraph
from ..models.schedule import Policy, Route, Schedule, SolverConfig, SolverMode
from ..models.traffic import Application, Packet, PacketKey, fragment, message_offset
from ..utils.errors import SearchSpaceTooLarge

logger = logging.getLogger(__name__)

LinkKey = Tuple[str, str]


@dataclass
class Choice:
    """One feasible assignment of a packet plus the resources it occupies"""
    key: PacketKey
    phi_v0: int
    r: int
    extra_delay: int
    windows: List[Tuple[LinkKey, int, int]]
    cycles: List[Tuple[LinkKey, int, int, int]]


class PlacementState:
    """Incremental occupancy of TAS link windows and DIP cycles

    Windows are cyclic: one that runs past t_ct is stored as two pieces.
    """

    def __init__(self, graph: NetworkGraph):
        self.graph = graph
        self.windows: Dict[LinkKey, List[Tuple[int, int, PacketKey]]] = {}
        self.cycles: Dict[Tuple[LinkKey, int], List[int]] = {}
        self.placed: Dict[PacketKey, Choice] = {}

    def _pieces(self, start: int, end: int) -> List[Tuple[int, int]]:
        t_ct = self.graph.time.t_ct
        if end <= t_ct:
            return [(start, end)]
        return [(start, t_ct), (0, end - t_ct)]

    def window_free(self, link_key: LinkKey, start: int, end: int) -> bool:
        items = self.windows.get(link_key)
        if not items:
            return True
        for lo, hi in self._pieces(start, end):
            idx = bisect_left(items, (lo,))
            if idx > 0 and items[idx - 1][1] > lo:
                return False
            if idx < len(items) and items[idx][0] < hi:
                return False
        return True

    def cycle_fits(self, link_key: LinkKey, cycle: int, bits: int, busy: int) -> bool:
        """Both the bit budget and the serialization time of the cycle must hold"""
        link = self.graph.links[link_key]
        used = self.cycles.get((link_key, cycle), (0, 0))
        t_dip = self.graph.time.t_dip
        return used[0] + bits <= link.cycle_capacity_bits(t_dip) and used[1] + busy <= t_dip

    def apply(self, choice: Choice) -> None:
        for link_key, start, end in choice.windows:
            for lo, hi in self._pieces(start, end):
                insort(self.windows.setdefault(link_key, []), (lo, hi, choice.key))
        for link_key, cycle, bits, busy in choice.cycles:
            used = self.cycles.setdefault((link_key, cycle), [0, 0])
            used[0] += bits
            used[1] += busy
        self.placed[choice.key] = choice

    def undo(self, key: PacketKey) -> None:
        choice = self.placed.pop(key)
        for link_key, start, end in choice.windows:
            for lo, hi in self._pieces(start, end):
                self.windows[link_key].remove((lo, hi, key))
        for link_key, cycle, bits, busy in choice.cycles:
            used = self.cycles[(link_key, cycle)]
            used[0] -= bits
            used[1] -= busy


class SearchSpace:
    """Candidate routes and discretized variable domains for every application"""

    def __init__(self, graph: NetworkGraph, apps: Sequence[Application], config: SolverConfig):
        self.graph = graph
        self.config = config
        self.step = config.granularity(graph)
        self.apps = {app.id: app for app in apps}
        self.routes: Dict[str, List[Route]] = {
            app.id: enumerate_routes(graph, app, config.routes_per_app()) for app in apps
        }
        self.packets: Dict[str, List[Packet]] = {app.id: fragment(app, graph.time) for app in apps}
        self._immediate: Dict[Tuple[str, Tuple[str, ...]], Dict[PacketKey, ScheduleEntry]] = {}

    @property
    def shaping(self) -> bool:
        return self.config.policy != Policy.NO_SHAPING

    def immediate_entries(self, app: Application, route: Route) -> Dict[PacketKey, ScheduleEntry]:
        """Settings of every packet when nothing is shaped

        The packets of a message leave the source back to back from its
        arrival, keep their cycles in the core, and at the egress edge wait
        only for the previous packet of the same message to clear the port.
        """
        cached = self._immediate.get((app.id, route.nodes))
        if cached is not None:
            return cached
        time = self.graph.time
        first = route.link_at(self.graph, 0)
        egress_node = route.nodes[route.m + 1]
        egress = route.link_at(self.graph, route.m + 1)
        entries: Dict[PacketKey, ScheduleEntry] = {}
        msg_index, ahead, cleared = None, 0, None
        for packet in self.packets[app.id]:
            if packet.msg_index != msg_index:
                msg_index, ahead, cleared = packet.msg_index, 0, None
            arrival = message_offset(app, packet.msg_index, time)
            phi = (arrival + ahead) % time.t_ct
            ahead += first.tx_time(packet.length)
            release = packet_timeline(packet, route, ScheduleEntry(phi, 0, 0), self.graph,
                                      arrival).departures[egress_node]
            extra = max(0, cleared - release) if cleared is not None else 0
            cleared = release + extra + egress.tx_time(packet.length)
            entries[packet.key] = ScheduleEntry(phi, 0, extra)
        self._immediate[(app.id, route.nodes)] = entries
        return entries

    def offset_candidates(self, app: Application, packet: Packet, route: Route) -> List[int]:
        """Source offsets ordered by waiting time; the arrival offset itself comes first"""
        t_ct = self.graph.time.t_ct
        arrival = message_offset(app, packet.msg_index, self.graph.time)
        limit = t_ct - route.link_at(self.graph, 0).tx_time(packet.length)
        if not self.shaping:
            phi = self.immediate_entries(app, route)[packet.key].phi_v0
            return [phi] if phi <= limit else []
        grid = set(range(0, limit + 1, self.step))
        if arrival <= limit:
            grid.add(arrival)
        return sorted(grid, key=lambda phi: ((phi - arrival) % t_ct, phi))

    def shift_candidates(self, route: Route) -> range:
        if not self.shaping:
            return range(1)
        return range(route.link_at(self.graph, route.k + 1).queues - 1)

    def extra_delay_slots(self) -> int:
        return 1 if not self.shaping else -(-self.graph.time.t_ct // self.step)

    def extra_delay_value(self, app: Application, route: Route, packet: Packet, slot: int) -> int:
        if not self.shaping:
            return self.immediate_entries(app, route)[packet.key].extra_delay
        return slot * self.step

    def extra_delay_slot(self, app: Application, route: Route, packet: Packet, extra: int) -> Optional[int]:
        """Inverse of extra_delay_value, None off the grid"""
        if not self.shaping:
            return 0 if extra == self.extra_delay_value(app, route, packet, 0) else None
        return extra // self.step if extra % self.step == 0 else None

    def choices(self, state: PlacementState, app: Application, route: Route, packet: Packet,
                phis: Optional[Sequence[int]] = None) -> Iterator[Choice]:
        """Feasible assignments of one packet given the current occupancy

        Only the source window has to end within the cycle; windows further
        along the route may wrap past t_ct.
        """
        graph = self.graph
        t_ct, t_dip, n_dip = graph.time.t_ct, graph.time.t_dip, graph.time.n_dip
        arrival = message_offset(app, packet.msg_index, graph.time)
        links = route.links(graph)
        tx = [link.tx_time(packet.length) for link in links]
        bits = 8 * packet.length * NS_PER_SECOND
        egress_nodes = range(route.m + 1, route.n)

        for phi in (phis if phis is not None else self.offset_candidates(app, packet, route)):
            ingress = tas_offsets(packet, route, phi, graph)
            windows = []
            for a in range(route.k + 1):
                start = ingress[route.nodes[a]]
                windows.append((links[a].key, start, start + tx[a]))
            if windows[0][2] > t_ct or not all(state.window_free(*window) for window in windows):
                continue

            base = packet_timeline(packet, route, ScheduleEntry(phi, 0, 0), graph, arrival)
            if base.delay > app.e2e + t_dip:
                break
            for r in self.shift_candidates(route):
                delay = base.delay + r * t_dip
                if delay > app.e2e:
                    break
                cycles = []
                for a, cycle in zip(range(route.k + 1, route.m + 1), base.cycles):
                    cycles.append((links[a].key, (cycle + r) % n_dip, bits, tx[a]))
                if not all(state.cycle_fits(lk, c, b, busy) for lk, c, b, busy in cycles):
                    continue
                slack = min(app.e2e - delay, t_ct - 1)
                if self.shaping:
                    extras = range(0, slack + 1, self.step)
                else:
                    extra = self.extra_delay_value(app, route, packet, 0)
                    extras = [extra] if extra <= slack else []
                for extra in extras:
                    egress = []
                    for a in egress_nodes:
                        start = (base.offsets[route.nodes[a]] + r * t_dip + extra) % t_ct
                        egress.append((links[a].key, start, start + tx[a]))
                    if all(state.window_free(*window) for window in egress):
                        yield Choice(packet.key, phi, r, extra, windows + egress, cycles)

    def space_size(self) -> float:
        """Upper bound on the number of leaf assignments of an exhaustive search"""
        total = 1.0
        for app_id, app in self.apps.items():
            options = 1.0
            for route in self.routes[app_id]:
                per_route = 1.0
                for packet in self.packets[app_id]:
                    per_route *= (len(self.offset_candidates(app, packet, route))
                                  * len(self.shift_candidates(route)) * self.extra_delay_slots())
                options += per_route
            total *= options
        return total


def schedule_from_state(space: SearchSpace, state: PlacementState, routes: Dict[str, Route]) -> Schedule:
    schedule = Schedule()
    for app_id in sorted(space.apps):
        schedule.admission[app_id] = app_id in routes
    for app_id, route in routes.items():
        schedule.routes[app_id] = route
    for key, choice in state.placed.items():
        schedule.src_offsets[key] = choice.phi_v0
        schedule.cycle_shifts[key] = choice.r
        schedule.extra_delays[key] = choice.extra_delay
    return schedule


def place_first_fit(space: SearchSpace, state: PlacementState, app: Application) -> Optional[Route]:
    """Place every packet of app on the first route that takes them all"""
    for route in space.routes[app.id]:
        placed = []
        for packet in space.packets[app.id]:
            choice = next(space.choices(state, app, route, packet), None)
            if choice is None:
                break
            state.apply(choice)
            placed.append(packet.key)
        else:
            return route
        for key in reversed(placed):
            state.undo(key)
    return None


def greedy_order(apps: Sequence[Application]) -> List[Application]:
    return sorted(apps, key=lambda app: (app.e2e, -app.msg_len, app.id))


def solve_greedy(graph: NetworkGraph, apps: Sequence[Application], config: SolverConfig) -> Schedule:
    """First-fit over routes, offsets, cycle shifts and extra delays"""
    space = SearchSpace(graph, apps, config)
    state = PlacementState(graph)
    routes: Dict[str, Route] = {}
    deadline = clock.monotonic() + config.time_budget
    timed_out = False
    for app in greedy_order(apps):
        if clock.monotonic() > deadline:
            timed_out = True
            logger.warning("time budget exhausted after %d of %d applications", len(routes), len(apps))
            break
        route = place_first_fit(space, state, app)
        if route is not None:
            routes[app.id] = route
    schedule = schedule_from_state(space, state, routes)
    schedule.timed_out = timed_out
    logger.info("greedy (%s): accepted %d of %d", config.policy.value, schedule.objective, len(apps))
    return schedule


def solve_exhaustive(graph: NetworkGraph, apps: Sequence[Application], config: SolverConfig) -> Schedule:
    """Branch and bound over the whole discretized space; optimal unless timed out"""
    if len(apps) > config.exhaustive_max_apps:
        raise SearchSpaceTooLarge(f"{len(apps)} applications exceed the exhaustive limit "
                                  f"{config.exhaustive_max_apps}", float('inf'))
    space = SearchSpace(graph, apps, config)
    size = space.space_size()
    if size > config.exhaustive_max_space:
        raise SearchSpaceTooLarge('search space too large for exhaustive mode', size)

    order = sorted(apps, key=lambda app: app.id)
    state = PlacementState(graph)
    routes: Dict[str, Route] = {}
    best = {'count': -1, 'schedule': Schedule()}
    deadline = clock.monotonic() + config.time_budget
    timed_out = [False]

    def record():
        if len(routes) > best['count']:
            best['count'] = len(routes)
            best['schedule'] = schedule_from_state(space, state, dict(routes))

    def place_packets(index: int, app: Application, route: Route, packets: List[Packet], p: int) -> bool:
        if p == len(packets):
            routes[app.id] = route
            done = visit(index + 1)
            del routes[app.id]
            return done
        for choice in space.choices(state, app, route, packets[p]):
            state.apply(choice)
            done = place_packets(index, app, route, packets, p + 1)
            state.undo(choice.key)
            if done:
                return True
        return False

    def visit(index: int) -> bool:
        """Returns True when the search can stop (all accepted or out of time)"""
        if clock.monotonic() > deadline:
            timed_out[0] = True
            return True
        if index == len(order):
            record()
            return best['count'] == len(order)
        if len(routes) + len(order) - index <= best['count']:
            return False
        app = order[index]
        for route in space.routes[app.id]:
            if place_packets(index, app, route, space.packets[app.id], 0):
                return True
        return visit(index + 1)

    visit(0)
    schedule = best['schedule']
    for app in apps:
        schedule.admission.setdefault(app.id, False)
    schedule.timed_out = timed_out[0]
    logger.info("exhaustive: accepted %d of %d (space %.3g)", schedule.objective, len(apps), size)
    return schedule


def repair(schedule: Schedule, validator: ScheduleValidator) -> Schedule:
    """Drop the application involved in most violations until the schedule is feasible"""
    schedule = schedule.copy()
    while True:
        report = validator.validate(schedule)
        if report.feasible:
            return schedule
        counts = report.offending_apps()
        if not counts:
            for app_id in schedule.accepted:
                schedule.drop(app_id)
            return schedule
        worst = max(sorted(counts), key=lambda a: counts[a])
        schedule.drop(worst)


def solve(graph: NetworkGraph, apps: Sequence[Application], config: SolverConfig,
          warm_start: Sequence[Schedule] = ()) -> Schedule:
    """Dispatch to the configured solver and keep the best feasible result"""
    if config.mode == SolverMode.EXHAUSTIVE:
        result = solve_exhaustive(graph, apps, config)
    elif config.mode == SolverMode.GENETIC:
        from .genetic import solve_genetic
        result = solve_genetic(graph, apps, config, warm_start=warm_start)
    else:
        result = solve_greedy(graph, apps, config)

    validator = ScheduleValidator(graph, apps)
    if not validator.validate(result).feasible:
        logger.error("solver produced an infeasible schedule; repairing")
        result = repair(result, validator)
    for candidate in warm_start:
        if candidate.objective > result.objective and validator.validate(candidate).feasible:
            timed_out = result.timed_out
            result = candidate.copy()
            result.timed_out = timed_out
    for app in apps:
        result.admission.setdefault(app.id, False)
    return result
