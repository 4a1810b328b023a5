"""
Periodic schedules: feasibility verification, exact evaluation of both
objectives, compact-form expansion, file I/O and solver report assembly.
"""
import json
import logging
import time
from fractions import Fraction
from math import lcm

from models import (
    CompactSchedule, CongruenceClass, Evaluation, FeasibilityReport, Instance,
    Schedule, ScheduleError, SolveReport, Violation,
)
from services.instance_service import metric_closure

logger = logging.getLogger('rftt.schedule')


def _check_vertices(instance: Instance, vertices, where: str):
    for v in vertices:
        if v not in instance.by_id:
            raise ScheduleError(f"unknown vertex id {v} on {where}")


def _gap_violation(vertex: int, days: list, period: int, limit: int) -> Violation | None:
    """Worst circular gap of a sorted, duplicate-free visit-day list."""
    if not days:
        return Violation(vertex, 'never-visited', limit)
    worst, wrap = days[0] + period - days[-1], True
    for a, b in zip(days, days[1:]):
        if b - a > worst:
            worst, wrap = b - a, False
    if worst > limit:
        return Violation(vertex, 'gap', limit, worst, wrap)
    return None


def verify(instance: Instance, schedule) -> FeasibilityReport:
    """Circular-gap check of every client against its original turnover."""
    if isinstance(schedule, CompactSchedule):
        return _verify_compact(instance, schedule)
    if schedule.period < 1:
        raise ScheduleError("zero period")

    visit_days = {j: [] for j in instance.clients}
    for day, visits in enumerate(schedule.days, start=1):
        _check_vertices(instance, visits, f"day {day}")
        for v in visits:
            seen = visit_days.get(v)
            if seen is not None and (not seen or seen[-1] != day):
                seen.append(day)

    violations = []
    for j in instance.clients:
        found = _gap_violation(j, visit_days[j], schedule.period, instance.turnover(j))
        if found:
            violations.append(found)
    return FeasibilityReport(not violations, tuple(violations))


def _verify_compact(instance: Instance, compact: CompactSchedule) -> FeasibilityReport:
    moduli: dict = {j: [] for j in instance.clients}
    for c in compact.classes:
        _check_vertices(instance, c.vertices, f"class {c.residue} mod {c.modulus}")
        for v in c.vertices:
            if v in moduli:
                moduli[v].append(c)

    violations = []
    for j in instance.clients:
        classes = moduli[j]
        period = lcm(*(c.modulus for c in classes)) if classes else 1
        days = [d for d in range(1, period + 1) if any(c.active(d) for c in classes)]
        found = _gap_violation(j, days, period, instance.turnover(j))
        if found:
            violations.append(found)
    return FeasibilityReport(not violations, tuple(violations))


def evaluate(instance: Instance, schedule: Schedule) -> Evaluation:
    dist = metric_closure(instance)
    per_day, priced = [], {}
    for day in range(1, schedule.period + 1):
        visits = schedule.visits(day)
        if visits not in priced:
            _check_vertices(instance, visits, f"day {day}")
            priced[visits] = dist.walk_cost(schedule.tour(day, instance.depot))
        per_day.append(priced[visits])
    total = sum(per_day, Fraction(0))
    return Evaluation(total / schedule.period, max(per_day), tuple(per_day))


def expand(compact: CompactSchedule, key=None) -> Schedule:
    """Unroll a compact schedule over lcm of its moduli; visit order by ``key`` (default id)."""
    period = compact.period
    days = tuple(tuple(sorted(compact.vertices_on(d), key=key)) for d in range(1, period + 1))
    return Schedule(period, days)


def rotate(schedule: Schedule, k: int) -> Schedule:
    k %= schedule.period
    return Schedule(schedule.period, schedule.days[k:] + schedule.days[:k])


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

def schedule_document(schedule) -> dict:
    if isinstance(schedule, CompactSchedule):
        return {"classes": [
            {"residue": c.residue, "modulus": c.modulus, "vertices": sorted(c.vertices)}
            for c in schedule.classes
        ]}
    return {"period": schedule.period, "days": [list(d) for d in schedule.days]}


def parse_schedule(doc: dict):
    if not isinstance(doc, dict):
        raise ScheduleError("schedule document must be a JSON object")
    try:
        if 'classes' in doc:
            return CompactSchedule(tuple(
                CongruenceClass(int(c['residue']), int(c['modulus']), frozenset(c['vertices']))
                for c in doc['classes']
            ))
        period = int(doc['period'])
        if period < 1:
            raise ScheduleError("zero period")
        return Schedule(period, tuple(tuple(d) for d in doc['days']))
    except (KeyError, TypeError) as e:
        raise ScheduleError(f"malformed schedule document: {e}")


def dump_schedule(schedule) -> str:
    return json.dumps(schedule_document(schedule)) + "\n"


def load_schedule(path: str):
    try:
        with open(path, encoding='utf-8') as fh:
            return parse_schedule(json.load(fh))
    except json.JSONDecodeError as e:
        raise ScheduleError(f"schedule file {path} is not valid JSON: {e}")


def save_schedule(schedule, path: str):
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        fh.write(dump_schedule(schedule))


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def make_report(instance: Instance, schedule: Schedule, algorithm: str, objective: str,
                lower_bound: Fraction | None, started: float,
                diagnostics: dict | None = None) -> SolveReport:
    """Verify and evaluate an emitted schedule; the feasible flag is the verifier's verdict."""
    feasibility = verify(instance, schedule)
    evaluation = evaluate(instance, schedule)
    report = SolveReport(
        algorithm=algorithm,
        objective=objective,
        instance=instance.name,
        period=schedule.period,
        avg=evaluation.avg,
        max=evaluation.max,
        lower_bound=lower_bound,
        feasible=feasibility.feasible,
        runtime_ms=int((time.perf_counter() - started) * 1000),
        diagnostics=dict(diagnostics or {}),
    )
    if not feasibility.feasible:
        report.error = "; ".join(v.description for v in feasibility.violations[:5])
        logger.error("%s on %s emitted an infeasible schedule: %s",
                     algorithm, instance.name, report.error)
    logger.info("%s %s on %s: avg=%s max=%s period=%d (%d ms)", algorithm, objective,
                instance.name, report.avg, report.max, report.period, report.runtime_ms)
    return report
