"""
Benchmark harness: expands a suite file into instances, runs every
(algorithm, objective) pair on each, and writes one CSV row per run.

Rows are computed in a thread pool but written in suite order, and the
runtime column stays blank unless the suite asks for timing, so the same
suite always produces the same bytes.

Every run keeps its row. The status column says what happened: ok,
infeasible (the emitted schedule failed verification), value-only, refused
(a size guard) or error. Cost and ratio are filled only for ok and
value-only rows; the error column carries the verifier or solver message.
"""
import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import prod

from config import Config
from models import (
    Instance, InvariantViolation, Objective, SizeGuardError, format_ratio,
)
from services.generator_service import GenSpec, generate
from services.instance_service import classify
from services.oracle_service import exact_minavg, exact_minmax
from services.solver_registry import build_registry

logger = logging.getLogger('rftt.bench')

CSV_COLUMNS = (
    'instance', 'n', 'topology', 'algorithm', 'objective', 'status',
    'cost_num', 'cost_den', 'lb_num', 'lb_den', 'oracle_num', 'oracle_den',
    'ratio', 'feasible', 'runtime_ms', 'error',
)


@dataclass
class SuiteEntry:
    family: str
    params: dict
    seeds: list
    algorithms: list
    objectives: list


@dataclass
class Suite:
    name: str
    entries: list
    workers: int = 1
    timing: bool = False
    oracle_enabled: bool = False
    oracle_max_states: int = 0
    oracle_max_clients: int = 0


@dataclass
class BenchRow:
    instance: str
    n: int
    topology: str
    algorithm: str
    objective: str
    status: str = "ok"     # ok | infeasible | value-only | refused | error
    cost: Fraction | None = None
    lower_bound: Fraction | None = None
    oracle: Fraction | None = None
    feasible: bool | None = None
    runtime_ms: int | None = None
    error: str = ""

    @property
    def ratio(self) -> Fraction | None:
        bounds = [b for b in (self.lower_bound, self.oracle) if b is not None]
        if self.cost is None or not bounds or not max(bounds):
            return None
        return self.cost / max(bounds)

    def csv_fields(self, timing: bool) -> list:
        def parts(x):
            return ("", "") if x is None else (x.numerator, x.denominator)
        return [
            self.instance, self.n, self.topology, self.algorithm, self.objective, self.status,
            *parts(self.cost), *parts(self.lower_bound), *parts(self.oracle),
            format_ratio(self.ratio),
            "" if self.feasible is None else str(self.feasible).lower(),
            self.runtime_ms if timing and self.runtime_ms is not None else "",
            self.error,
        ]


# ---------------------------------------------------------------------------
# Suite files
# ---------------------------------------------------------------------------

def parse_suite(doc: dict) -> Suite:
    if not isinstance(doc, dict) or 'entries' not in doc:
        raise ValueError("suite document needs an 'entries' list")
    entries = []
    for i, raw in enumerate(doc['entries']):
        if 'family' not in raw:
            raise ValueError(f"suite entry {i} has no family")
        if 'seed_range' in raw:
            start, stop = raw['seed_range']
            seeds = list(range(start, stop))
        else:
            seeds = list(raw.get('seeds', [0]))
        entries.append(SuiteEntry(
            family=raw['family'],
            params=dict(raw.get('params', {})),
            seeds=seeds,
            algorithms=list(raw.get('algorithms', [])),
            objectives=list(raw.get('objectives', [o.value for o in Objective])),
        ))
    oracle = doc.get('oracle', {})
    return Suite(
        name=str(doc.get('name', 'suite')),
        entries=entries,
        workers=max(1, int(doc.get('workers', Config.BENCH_WORKERS))),
        timing=bool(doc.get('timing', False)),
        oracle_enabled=bool(oracle.get('enabled', False)),
        oracle_max_states=int(oracle.get('max_states', Config.ORACLE_MAX_STATES)),
        oracle_max_clients=int(oracle.get('max_clients', Config.BENCH_ORACLE_MAX_CLIENTS)),
    )


def load_suite(path: str) -> Suite:
    with open(path, encoding='utf-8') as fh:
        return parse_suite(json.load(fh))


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

def _oracle_value(instance: Instance, objective: str, suite: Suite) -> Fraction | None:
    if not suite.oracle_enabled or not instance.clients:
        return None
    turnovers = [instance.turnover(j) for j in instance.clients]
    if len(turnovers) > suite.oracle_max_clients or prod(turnovers) > suite.oracle_max_states:
        return None
    exact = exact_minavg if objective == Objective.MIN_AVG.value else exact_minmax
    try:
        value, _ = exact(instance, suite.oracle_max_states, suite.oracle_max_clients)
    except SizeGuardError as e:
        logger.info("oracle skipped on %s: %s", instance.name, e)
        return None
    return value


def run_instance(instance: Instance, entry: SuiteEntry, suite: Suite, registry) -> list:
    """All rows of one instance, in (algorithm, objective) suite order."""
    topology = classify(instance).value
    oracle_values: dict = {}
    rows = []
    for algorithm in entry.algorithms:
        try:
            adapter = registry.get(algorithm)
        except ValueError as e:
            rows.append(BenchRow(instance.name, len(instance.clients), topology, algorithm,
                                 "", status="error", error=str(e)))
            continue
        for objective in entry.objectives:
            if objective not in adapter.objectives():
                continue
            row = BenchRow(instance.name, len(instance.clients), topology, algorithm, objective)
            if objective not in oracle_values:
                oracle_values[objective] = _oracle_value(instance, objective, suite)
            row.oracle = oracle_values[objective]
            try:
                schedule, report = adapter.solve(instance, objective)
                row.lower_bound = report.lower_bound
                row.runtime_ms = report.runtime_ms
                row.feasible = report.feasible
                if schedule is None:
                    row.status, row.cost = "value-only", report.cost
                elif not report.feasible:
                    row.status, row.error = "infeasible", report.error
                else:
                    row.cost = report.cost
                    if row.oracle is not None and row.cost < row.oracle:
                        raise InvariantViolation(
                            f"{algorithm} cost {row.cost} is below the oracle value {row.oracle}")
            except SizeGuardError as e:
                row.status, row.error, row.cost = "refused", str(e), None
            except Exception as e:
                logger.error("%s %s on %s failed: %s", algorithm, objective, instance.name, e)
                row.status, row.error, row.cost = "error", str(e), None
            rows.append(row)
    return rows


def expand_suite(suite: Suite) -> list:
    """(instance, entry) pairs in suite order; generator failures raise."""
    jobs = []
    for entry in suite.entries:
        for seed in entry.seeds:
            jobs.append((generate(GenSpec(entry.family, entry.params, seed)), entry))
    return jobs


def run_suite(suite: Suite | str, output_path: str | None = None) -> list:
    if isinstance(suite, str):
        suite = load_suite(suite)
    registry = build_registry(suite.oracle_max_states, suite.oracle_max_clients)
    jobs = expand_suite(suite)
    logger.info("suite %s: %d instances on %d workers", suite.name, len(jobs), suite.workers)

    with ThreadPoolExecutor(max_workers=suite.workers, thread_name_prefix='bench') as pool:
        per_instance = list(pool.map(lambda job: run_instance(job[0], job[1], suite, registry), jobs))
    rows = [row for chunk in per_instance for row in chunk]

    if output_path:
        write_csv(rows, output_path, suite.timing)
    return rows


def write_csv(rows, path: str, timing: bool = False):
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow(row.csv_fields(timing))


def summarize(rows) -> list:
    """Per (algorithm, objective): rows, feasible rows and worst ratio."""
    groups: dict = {}
    for row in rows:
        if not row.objective:
            continue
        g = groups.setdefault((row.algorithm, row.objective),
                              {"algorithm": row.algorithm, "objective": row.objective,
                               "rows": 0, "feasible": 0, "worst_ratio": None})
        g["rows"] += 1
        if row.feasible:
            g["feasible"] += 1
        ratio = row.ratio
        if ratio is not None and (g["worst_ratio"] is None or ratio > g["worst_ratio"]):
            g["worst_ratio"] = ratio
    out = []
    for g in groups.values():
        out.append({**g, "worst_ratio": format_ratio(g["worst_ratio"])})
    return out
