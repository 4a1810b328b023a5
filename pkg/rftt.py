"""
rftt command line: instance generation, solving, verification, pinwheel
decisions and benchmark suites.

Usage:
    python rftt.py gen random_tree --n 8 --seed 3 -o inst.json
    python rftt.py gen pinwheel --periods 2,4,4 --shape sp -o sp.json
    python rftt.py solve --objective min-max --algo tree6 -i inst.json -o sched.json
    python rftt.py verify -i inst.json -s sched.json
    python rftt.py pinwheel --periods 2,3,6
    python rftt.py bench --suite suites/smoke.json --csv out.csv

Exit codes: 0 ok, 1 infeasible or negative answer, 2 input error,
3 size-guard refusal.
"""
import functools
import json
import logging
import sys

import click

from config import Config
from models import (
    CompactSchedule, Objective, RfttError, SizeGuardError,
)
from services.bench_service import run_suite, summarize
from services.generator_service import FAMILIES, RANDOM_FAMILIES, GenSpec, generate
from services.instance_service import dump_instance, load_instance
from services.oracle_service import pinwheel_feasible
from services.schedule_service import evaluate, load_schedule, save_schedule, verify
from services.solver_registry import build_registry

logger = logging.getLogger('rftt.cli')

EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_GUARD = 3


class _JsonFormatter(logging.Formatter):
    """Produce valid JSON log lines even when message contains quotes/newlines."""
    def format(self, record):
        entry = {
            "timestamp": self.formatTime(record),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        context = getattr(record, 'context', None)
        if context:
            entry["context"] = context
        return json.dumps(entry, default=str)


def configure_logging(level: str, fmt: str):
    handler = logging.StreamHandler(sys.stderr)
    if fmt == 'text':
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    else:
        handler.setFormatter(_JsonFormatter())
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO),
                        handlers=[handler], force=True)
    Config.validate()


def _int_list(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(x) for x in value.split(',') if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")


def _exit_codes(fn):
    """Map library errors onto the documented exit codes."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SizeGuardError as e:
            logger.warning("size guard: %s", e)
            click.echo(f"refused: {e}", err=True)
            sys.exit(EXIT_GUARD)
        except (RfttError, ValueError, OSError) as e:
            logger.error("input error: %s", e)
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_INPUT)
    return wrapper


def _emit(doc: dict):
    click.echo(json.dumps(doc, indent=2, default=str))


@click.group()
@click.option('--log-level', default=lambda: Config.LOG_LEVEL, show_default='RFTT_LOG_LEVEL or INFO')
@click.option('--log-format', type=click.Choice(['json', 'text']),
              default=lambda: Config.LOG_FORMAT if Config.LOG_FORMAT in ('json', 'text') else 'json')
def cli(log_level, log_format):
    """Replenishment with fixed turnover times: solvers and workbench."""
    configure_logging(log_level, log_format)


@cli.command()
@click.argument('family', type=click.Choice(sorted(FAMILIES + ('pinwheel',))))
@click.option('--n', 'n', type=int, help="number of clients (random families)")
@click.option('--i', 'index', type=int, help="family index (gi, hi)")
@click.option('--periods', callback=_int_list, help="comma-separated job periods")
@click.option('--ints', callback=_int_list, help="comma-separated 3-partition integers")
@click.option('--m', 'm', type=int, help="number of triples (partition_star)")
@click.option('--shape', type=click.Choice(['star', 'sp']), default='star', show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--max-weight', type=int, default=10, show_default=True)
@click.option('--max-turnover', type=int, default=8, show_default=True)
@click.option('--extra-edges', type=int, help="extra edges beyond the spanning tree (random_general)")
@click.option('-o', '--output', type=click.Path(dir_okay=False, writable=True))
@_exit_codes
def gen(family, n, index, periods, ints, m, shape, seed, max_weight, max_turnover,
        extra_edges, output):
    """Generate an instance file."""
    if family == 'pinwheel':
        family = 'pinwheel_star' if shape == 'star' else 'pinwheel_sp'
    if family in RANDOM_FAMILIES:
        params = {"n": n, "max_weight": max_weight, "max_turnover": max_turnover}
        if extra_edges is not None:
            params["extra_edges"] = extra_edges
    else:
        params = {"periods": periods or [], "ints": ints or [], "m": m, "i": index}
    instance = generate(GenSpec(family, params, seed))
    text = dump_instance(instance)
    if output:
        with open(output, 'w', encoding='utf-8', newline='\n') as fh:
            fh.write(text)
        logger.info("wrote %s (%d clients) to %s", instance.name, len(instance.clients), output)
    else:
        click.echo(text, nl=False)


@cli.command()
@click.option('--objective', type=click.Choice([o.value for o in Objective]), required=True)
@click.option('--algo', 'algorithm', required=True)
@click.option('-i', '--instance', 'instance_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('-o', '--output', type=click.Path(dir_okay=False, writable=True))
@_exit_codes
def solve(objective, algorithm, instance_path, output):
    """Solve an instance and print the report."""
    instance = load_instance(instance_path)
    adapter = build_registry().get(algorithm)
    schedule, report = adapter.solve(instance, objective)
    if output and schedule is not None:
        save_schedule(schedule, output)
    _emit(report.to_dict())
    if report.feasible is False:
        sys.exit(EXIT_NEGATIVE)


@cli.command(name='verify')
@click.option('-i', '--instance', 'instance_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('-s', '--schedule', 'schedule_path', required=True, type=click.Path(exists=True, dir_okay=False))
@_exit_codes
def verify_cmd(instance_path, schedule_path):
    """Check a schedule against an instance's turnovers."""
    instance = load_instance(instance_path)
    schedule = load_schedule(schedule_path)
    result = verify(instance, schedule)
    doc = result.to_dict()
    if not isinstance(schedule, CompactSchedule):
        evaluation = evaluate(instance, schedule)
        doc.update({"period": schedule.period, "avg": str(evaluation.avg),
                    "max": str(evaluation.max)})
    _emit(doc)
    if not result.feasible:
        sys.exit(EXIT_NEGATIVE)


@cli.command()
@click.option('--periods', callback=_int_list, required=True)
@_exit_codes
def pinwheel(periods):
    """Decide whether a pinwheel instance can be scheduled."""
    result = pinwheel_feasible(periods)
    _emit(result.as_dict(periods))
    if not result.feasible:
        sys.exit(EXIT_NEGATIVE)


@cli.command()
@click.option('--suite', 'suite_path', required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--csv', 'csv_path', required=True, type=click.Path(dir_okay=False, writable=True))
@_exit_codes
def bench(suite_path, csv_path):
    """Run a benchmark suite into a CSV file."""
    rows = run_suite(suite_path, csv_path)
    for entry in summarize(rows):
        logger.info("summary %s %s", entry["algorithm"], entry["objective"], extra={"context": entry})
        click.echo(json.dumps(entry))
    bad = [r for r in rows if r.status in ('infeasible', 'error')]
    if bad:
        click.echo(f"{len(bad)} of {len(rows)} rows failed", err=True)
        sys.exit(EXIT_NEGATIVE)


if __name__ == '__main__':
    cli()
