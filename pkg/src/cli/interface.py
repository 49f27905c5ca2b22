"""
Command Line Interface
Scheduling, validation, simulation and experiment sweeps over scenario files
"""

import functools
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

import click
from rich.console import Console

from ..data.scenario_generator import ScenarioGenerator, bottleneck_links, sweep_levels
from ..data.scenario_loader import Scenario, load_scenario, save_scenario
from ..engine.device_compiler import compile_all
from ..engine.scheduler import solve
from ..engine.validator import validate
from ..models.schedule import Policy, Schedule, SolverConfig, SolverMode
from ..simulation.interference import uniform_interference
from ..simulation.simulator import measure_jitter, run, run_best_effort
from ..utils.config import Settings, load_settings
from ..utils.errors import ConfigurationError, DetnetError, RouteError, SearchSpaceTooLarge
from ..utils.formatter import ReportFormatter, rows_to_csv
from ..utils.logging_setup import setup_logging

logger = logging.getLogger(__name__)

EXIT_INFEASIBLE_INPUT = 1
EXIT_INVARIANT_BREACH = 2


class Pipeline:
    """Shared state of one CLI invocation"""

    def __init__(self, settings: Settings, console: Console):
        self.settings = settings
        self.console = console
        self.formatter = ReportFormatter(console)

    def solver_config(self, scenario: Scenario, solver: Optional[str], policy: Optional[str],
                      seed: Optional[int]) -> SolverConfig:
        config = scenario.solver_config(self.settings.solver)
        overrides = {}
        if solver:
            overrides['mode'] = solver
        if policy:
            overrides['policy'] = policy
        if seed is not None:
            overrides['seed'] = seed
        return config.with_overrides(**overrides)

    def schedule(self, scenario: Scenario, config: SolverConfig) -> Schedule:
        result = solve(scenario.graph, scenario.apps, config)
        report = validate(result, scenario.graph, scenario.apps)
        if not report.feasible:
            raise InvariantBreach(f"solver emitted a schedule with {len(report.violations)} violations")
        return result


class InvariantBreach(DetnetError):
    """Internal consistency check failed"""


def handle_errors(command):
    """Map package errors to exit codes"""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return command(*args, **kwargs)
        except (ConfigurationError, RouteError, SearchSpaceTooLarge) as e:
            click.echo(f"error: {e}", err=True)
            ctx.exit(EXIT_INFEASIBLE_INPUT)
        except DetnetError as e:
            click.echo(f"internal error: {e}", err=True)
            ctx.exit(EXIT_INVARIANT_BREACH)

    return wrapper


def parse_levels(ctx, param, value: Optional[str]):
    if value is None:
        return None
    try:
        return sweep_levels(value)
    except ValueError as e:
        raise click.BadParameter(str(e)) from None


scenario_option = click.option('--scenario', 'scenario_path', required=True,
                               type=click.Path(exists=True, dir_okay=False, path_type=Path),
                               help='Scenario JSON file')
out_option = click.option('--out', 'out_dir', default='out', show_default=True,
                          type=click.Path(file_okay=False, path_type=Path), help='Output directory')
seed_option = click.option('--seed', type=int, default=None, help='Override the solver seed')
policy_option = click.option('--policy', type=click.Choice([p.value for p in Policy]), default=None)
solver_option = click.option('--solver', type=click.Choice([m.value for m in SolverMode]), default=None)
horizon_option = click.option('--horizon', type=click.IntRange(min=1), default=None,
                              help='Simulated hypercycles')


@click.group()
@click.option('-v', '--verbose', is_flag=True, help='Debug logging')
@click.option('--config', 'config_path', type=click.Path(dir_okay=False, path_type=Path), default=None,
              help='Settings YAML (defaults to config/defaults.yaml)')
@click.pass_context
def cli(ctx, verbose: bool, config_path: Optional[Path]):
    """Joint scheduling of TAS access networks and a DIP core"""
    console = Console()
    setup_logging(verbose)
    try:
        settings = load_settings(config_path)
    except ConfigurationError as e:
        click.echo(f"error: {e}", err=True)
        ctx.exit(EXIT_INFEASIBLE_INPUT)
    ctx.obj = Pipeline(settings, console)


@cli.command('schedule')
@scenario_option
@out_option
@seed_option
@policy_option
@solver_option
@click.pass_obj
@handle_errors
def cmd_schedule(pipeline: Pipeline, scenario_path: Path, out_dir: Path, seed, policy, solver):
    """Solve admission and write schedule.json and validation.json"""
    scenario = load_scenario(scenario_path, pipeline.settings.mtu_bytes)
    config = pipeline.solver_config(scenario, solver, policy, seed)
    result = solve(scenario.graph, scenario.apps, config)
    report = validate(result, scenario.graph, scenario.apps)
    pipeline.formatter.write_json(result.to_dict(), out_dir / 'schedule.json')
    pipeline.formatter.write_json(report.to_dict(), out_dir / 'validation.json')
    if not report.feasible:
        raise InvariantBreach(f"solver emitted a schedule with {len(report.violations)} violations")
    click.echo(pipeline.formatter.format_summary(result, len(scenario.apps)))
    pipeline.formatter.print_tables([pipeline.formatter.schedule_table(result)])


@cli.command('validate')
@scenario_option
@click.option('--schedule', 'schedule_path', required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@out_option
@click.pass_obj
@handle_errors
def cmd_validate(pipeline: Pipeline, scenario_path: Path, schedule_path: Path, out_dir: Path):
    """Check a schedule file against a scenario"""
    scenario = load_scenario(scenario_path, pipeline.settings.mtu_bytes)
    try:
        data = json.loads(schedule_path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{schedule_path}: {e.msg} (line {e.lineno}, column {e.colno})") from None
    schedule = Schedule.from_dict(data, scenario.graph)
    report = validate(schedule, scenario.graph, scenario.apps)
    pipeline.formatter.write_json(report.to_dict(), out_dir / 'validation.json')
    if report.feasible:
        click.echo(f"feasible: {pipeline.formatter.format_summary(schedule, len(scenario.apps))}")
        return
    pipeline.formatter.print_tables([pipeline.formatter.violation_table(report)])
    click.get_current_context().exit(EXIT_INFEASIBLE_INPUT)


@cli.command('simulate')
@scenario_option
@out_option
@seed_option
@policy_option
@solver_option
@horizon_option
@click.option('--utilization', type=click.FloatRange(0, 1, max_open=True), default=0.0, show_default=True,
              help='Interference load on the source access links')
@click.pass_obj
@handle_errors
def cmd_simulate(pipeline: Pipeline, scenario_path: Path, out_dir: Path, seed, policy, solver, horizon,
                 utilization: float):
    """Schedule, compile device programs and simulate; writes trace.csv and summary.csv"""
    scenario = load_scenario(scenario_path, pipeline.settings.mtu_bytes)
    sim = pipeline.settings.simulation
    config = pipeline.solver_config(scenario, solver, policy, seed)
    result = pipeline.schedule(scenario, config)
    programs = compile_all(result, scenario.graph, scenario.apps)
    interference = uniform_interference(scenario.graph, bottleneck_links(scenario.graph), utilization,
                                        config.seed, sim.interference_packet_size, sim.interference_flow_share)
    trace = run(scenario.graph, programs, scenario.apps, interference, horizon or sim.horizon,
                sim.be_queue_capacity)
    trace.write_csv(out_dir)
    pipeline.formatter.write_json(result.to_dict(), out_dir / 'schedule.json')
    pipeline.formatter.write_json({node: p.to_dict() for node, p in programs.items()}, out_dir / 'programs.json')
    click.echo(pipeline.formatter.format_summary(result, len(scenario.apps)))
    pipeline.formatter.print_tables([pipeline.formatter.frame_table(trace.summary_frame(), 'Delays')])


def _max_jitter(trace, app_ids: List[str]) -> int:
    jitters = [measure_jitter(trace, app_id) for app_id in app_ids if len(trace.delays(app_id)) >= 2]
    return max(jitters, default=0)


@cli.command('sweep-utilization')
@scenario_option
@out_option
@seed_option
@solver_option
@horizon_option
@click.option('--levels', callback=parse_levels, default='0.2,0.59,0.9', show_default=True)
@click.pass_obj
@handle_errors
def cmd_sweep_utilization(pipeline: Pipeline, scenario_path: Path, out_dir: Path, seed, solver, horizon, levels):
    """Jitter of scheduled and best-effort transmission per interference level"""
    scenario = load_scenario(scenario_path, pipeline.settings.mtu_bytes)
    sim = pipeline.settings.simulation
    config = pipeline.solver_config(scenario, solver, None, seed)
    result = pipeline.schedule(scenario, config)
    programs = compile_all(result, scenario.graph, scenario.apps)
    accepted = result.accepted
    routes = {app_id: result.routes[app_id] for app_id in accepted}
    horizon = horizon or sim.horizon

    rows = []
    for level in levels:
        interference = uniform_interference(scenario.graph, bottleneck_links(scenario.graph), level,
                                            config.seed, sim.interference_packet_size,
                                            sim.interference_flow_share)
        scheduled = run(scenario.graph, programs, scenario.apps, interference, horizon, sim.be_queue_capacity)
        best_effort = run_best_effort(scenario.graph, scenario.apps, routes, interference, horizon,
                                      sim.be_queue_capacity)
        be_delays = [d for app_id in accepted for d in best_effort.delays(app_id)]
        sched_delays = [d for app_id in accepted for d in scheduled.delays(app_id)]
        rows.append({
            'utilization': level,
            'scheduled_jitter_ns': _max_jitter(scheduled, accepted),
            'best_effort_jitter_ns': _max_jitter(best_effort, accepted),
            'scheduled_max_delay_ns': max(sched_delays, default=0),
            'best_effort_min_delay_ns': min(be_delays, default=0),
            'best_effort_max_delay_ns': max(be_delays, default=0),
            'best_effort_drops': best_effort.drops,
        })
        logger.info("utilization %.2f done", level)
    frame = rows_to_csv(rows, list(rows[0]) if rows else ['utilization'], out_dir / 'utilization_sweep.csv')
    pipeline.formatter.print_tables([pipeline.formatter.frame_table(frame, 'Utilization sweep')])


@cli.command('sweep-load')
@scenario_option
@out_option
@seed_option
@solver_option
@click.option('--levels', callback=parse_levels, default='240,480,720,960', show_default=True,
              help='Deterministic load per source host in Mbps')
@click.pass_obj
@handle_errors
def cmd_sweep_load(pipeline: Pipeline, scenario_path: Path, out_dir: Path, seed, solver, levels):
    """Acceptance ratio per offered load under the three policies"""
    scenario = load_scenario(scenario_path, pipeline.settings.mtu_bytes)
    base = pipeline.solver_config(scenario, solver, None, seed)
    generator = ScenarioGenerator(base.seed)
    rows = []
    for level in levels:
        e2e = max((a.e2e for a in scenario.apps), default=1_500_000)
        apps = generator.load_apps(scenario.graph, level, e2e=e2e, mtu=scenario.mtu)
        ratios: Dict[str, float] = {}
        if not apps:
            ratios = {'full': 1.0, 'no-shaping': 1.0, 'no-route': 1.0}
        else:
            baseline = solve(scenario.graph, apps, base.with_overrides(policy=Policy.NO_SHAPING.value))
            full = solve(scenario.graph, apps, base.with_overrides(policy=Policy.FULL.value), warm_start=[baseline])
            no_route = solve(scenario.graph, apps, base.with_overrides(policy=Policy.NO_ROUTE.value))
            for name, schedule in (('full', full), ('no-shaping', baseline), ('no-route', no_route)):
                ratios[name] = schedule.objective / len(apps)
        rows.append({'load': level, 'full_ratio': ratios['full'], 'no_shaping_ratio': ratios['no-shaping'],
                     'no_route_ratio': ratios['no-route']})
        logger.info("load %s Mbps: %s", level, ratios)
    frame = rows_to_csv(rows, ['load', 'full_ratio', 'no_shaping_ratio', 'no_route_ratio'],
                        out_dir / 'load_sweep.csv')
    pipeline.formatter.print_tables([pipeline.formatter.frame_table(frame, 'Load sweep')])


@cli.command('generate')
@click.option('--kind', type=click.Choice(['example', 'core', 'small']), default='core', show_default=True)
@click.option('--apps', 'n_apps', type=click.IntRange(min=0), default=None)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', 'out_path', required=True, type=click.Path(dir_okay=False, path_type=Path))
@handle_errors
def cmd_generate(kind: str, n_apps: Optional[int], seed: int, out_path: Path):
    """Write a generated scenario file"""
    generator = ScenarioGenerator(seed)
    if kind == 'example':
        scenario = generator.worked_example()
    elif kind == 'small':
        scenario = generator.small_instance(n_apps if n_apps is not None else 3)
    else:
        scenario = generator.core_scenario(n_apps if n_apps is not None else 20)
    save_scenario(scenario, out_path)
    click.echo(f"wrote {out_path} ({len(scenario.graph.nodes)} nodes, {len(scenario.apps)} applications)")
