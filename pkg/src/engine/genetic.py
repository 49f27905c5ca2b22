"""
Genetic admission search built on DEAP

An individual holds, per application (ordered by id), an admission gene, a
route index and for every packet an index into the source-offset
candidates, a cycle shift and an extra-delay slot. Decoded schedules are
repaired by dropping the worst offending application until feasible, and
the repair is written back into the individual.
"""

import logging
import random
import time as clock
from typing import List, Optional, Sequence, Tuple

from deap import base, creator, tools

from .scheduler import SearchSpace, repair, solve_greedy
from .validator import ScheduleValidator
from ..models.network import NetworkGraph
from ..models.schedule import Schedule, SolverConfig, SolverMode
from ..models.traffic import Application

logger = logging.getLogger(__name__)

if not hasattr(creator, 'AdmissionFitness'):
    creator.create('AdmissionFitness', base.Fitness, weights=(1.0,))
if not hasattr(creator, 'AdmissionIndividual'):
    creator.create('AdmissionIndividual', list, fitness=creator.AdmissionFitness)

GENES_PER_PACKET = 3


class GenomeLayout:
    """Maps between flat integer genomes and schedules"""

    def __init__(self, space: SearchSpace):
        self.space = space
        self.app_ids = sorted(space.apps)
        self.starts = {}
        self.low: List[int] = []
        self.up: List[int] = []
        slots = space.extra_delay_slots()
        for app_id in self.app_ids:
            app = space.apps[app_id]
            routes = space.routes[app_id]
            self.starts[app_id] = len(self.low)
            self.low += [0, 0]
            self.up += [1 if routes else 0, max(len(routes) - 1, 0)]
            for packet in space.packets[app_id]:
                n_phi = max((len(space.offset_candidates(app, packet, r)) for r in routes), default=1)
                n_r = max((len(space.shift_candidates(r)) for r in routes), default=1)
                self.low += [0, 0, 0]
                self.up += [max(n_phi - 1, 0), max(n_r - 1, 0), slots - 1]

    def __len__(self) -> int:
        return len(self.low)

    def random_genes(self) -> List[int]:
        return [random.randint(lo, hi) for lo, hi in zip(self.low, self.up)]

    def decode(self, genes: Sequence[int]) -> Schedule:
        space = self.space
        schedule = Schedule()
        for app_id in self.app_ids:
            start = self.starts[app_id]
            routes = space.routes[app_id]
            schedule.admission[app_id] = False
            if not genes[start] or not routes:
                continue
            app = space.apps[app_id]
            route = routes[genes[start + 1] % len(routes)]
            values = []
            for p, packet in enumerate(space.packets[app_id]):
                pos = start + 2 + GENES_PER_PACKET * p
                phis = space.offset_candidates(app, packet, route)
                if not phis:
                    break
                shifts = space.shift_candidates(route)
                values.append((packet.key, phis[genes[pos] % len(phis)], shifts[genes[pos + 1] % len(shifts)],
                               space.extra_delay_value(app, route, packet, genes[pos + 2])))
            else:
                schedule.admission[app_id] = True
                schedule.routes[app_id] = route
                for key, phi, r, extra in values:
                    schedule.src_offsets[key] = phi
                    schedule.cycle_shifts[key] = r
                    schedule.extra_delays[key] = extra
        return schedule

    def encode(self, schedule: Schedule) -> Optional[List[int]]:
        """Genome of a schedule, or None when it lies outside the candidate grid"""
        space = self.space
        genes = [0] * len(self)
        for app_id in self.app_ids:
            if not schedule.admission.get(app_id):
                continue
            start = self.starts[app_id]
            routes = space.routes[app_id]
            route = schedule.routes.get(app_id)
            if route not in routes:
                return None
            genes[start], genes[start + 1] = 1, routes.index(route)
            app = space.apps[app_id]
            for p, packet in enumerate(space.packets[app_id]):
                pos = start + 2 + GENES_PER_PACKET * p
                phis = space.offset_candidates(app, packet, route)
                phi = schedule.src_offsets.get(packet.key)
                extra = schedule.extra_delays.get(packet.key)
                r = schedule.cycle_shifts.get(packet.key)
                if phi not in phis or r not in space.shift_candidates(route) or extra is None:
                    return None
                slot = space.extra_delay_slot(app, route, packet, extra)
                if slot is None:
                    return None
                genes[pos:pos + 3] = [phis.index(phi), r, slot]
        return genes


def solve_genetic(graph: NetworkGraph, apps: Sequence[Application], config: SolverConfig,
                  warm_start: Sequence[Schedule] = ()) -> Schedule:
    """Evolve admission and per-packet settings; never worse than greedy"""
    random.seed(config.seed)
    space = SearchSpace(graph, apps, config)
    layout = GenomeLayout(space)
    validator = ScheduleValidator(graph, apps)
    greedy = solve_greedy(graph, apps, config.with_overrides(mode=SolverMode.GREEDY.value))
    if len(layout) < 2:
        return greedy

    toolbox = base.Toolbox()
    toolbox.register('individual', tools.initIterate, creator.AdmissionIndividual, layout.random_genes)
    toolbox.register('mate', tools.cxTwoPoint)
    toolbox.register('mutate', tools.mutUniformInt, low=layout.low, up=layout.up,
                     indpb=max(1.0 / len(layout), config.mutation_rate / GENES_PER_PACKET))
    toolbox.register('select', tools.selTournament, tournsize=3)

    def evaluate(individual) -> Tuple[int]:
        schedule = repair(layout.decode(individual), validator)
        for app_id in layout.app_ids:
            if not schedule.admission.get(app_id):
                individual[layout.starts[app_id]] = 0
        return (schedule.objective,)

    population = []
    for schedule in [greedy, *warm_start]:
        genes = layout.encode(schedule)
        if genes is not None:
            population.append(creator.AdmissionIndividual(genes))
    seeded = len(population)
    while len(population) < max(config.population, 2):
        population.append(toolbox.individual())
    population = population[:max(config.population, seeded)]

    for individual in population:
        individual.fitness.values = evaluate(individual)
    hall = tools.HallOfFame(1)
    hall.update(population)

    deadline = clock.monotonic() + config.time_budget
    timed_out = False
    for generation in range(config.generations):
        if hall[0].fitness.values[0] >= len(apps):
            break
        if clock.monotonic() > deadline:
            timed_out = True
            logger.warning("time budget exhausted after %d generations", generation)
            break
        offspring = [toolbox.clone(ind) for ind in toolbox.select(population, len(population) - 1)]
        for first, second in zip(offspring[::2], offspring[1::2]):
            if random.random() < config.crossover_rate:
                toolbox.mate(first, second)
                del first.fitness.values, second.fitness.values
        for mutant in offspring:
            if random.random() < config.mutation_rate:
                toolbox.mutate(mutant)
                del mutant.fitness.values
        for individual in offspring:
            if not individual.fitness.valid:
                individual.fitness.values = evaluate(individual)
        population = [toolbox.clone(hall[0])] + offspring
        hall.update(population)
        logger.debug("generation %d: best %d", generation, hall[0].fitness.values[0])

    best = repair(layout.decode(hall[0]), validator)
    if greedy.objective > best.objective:
        best = greedy
    best.timed_out = timed_out
    logger.info("genetic: accepted %d of %d", best.objective, len(apps))
    return best
