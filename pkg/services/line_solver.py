"""
Exact MIN-AVG on line metrics.

A line splits at the depot into two half-lines that are solved
independently. On a half-line a tour is determined by its farthest vertex,
so after dominance pruning the kept vertices have strictly increasing
turnovers, and a visit to the farthest one resets every clock. The optimal
cyclic plan repeats one block ending with such a visit; ``fill_table``
prices the days before it.
"""
import logging
import time
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

from config import Config
from models import (
    CompactSchedule, CongruenceClass, Instance, InstanceError, InvariantViolation,
    Objective, Schedule, SizeGuardError, SolveReport, TopologyError,
)
from services.general_solver import general_lower_bound
from services.instance_service import normalize, root_tree
from services.schedule_service import make_report

logger = logging.getLogger('rftt.line')


@dataclass(frozen=True)
class DpTable:
    """phi[i][k]: cheapest one-way cost of k days serving vertices 1..i, all
    clocks fresh before day 1 and reset again on day k + 1.

    choice[i][k] is the day of the first visit to vertex i, 0 if none.
    """
    phi: list
    choice: list

    def reach(self, i: int, k: int) -> list:
        """Farthest vertex index served on each of the k days (0 = idle)."""
        out = [0] * (k + 1)
        stack = [(i, k, 0)]
        while stack:
            i, k, offset = stack.pop()
            if i == 0 or k == 0:
                continue
            first = self.choice[i][k]
            if first == 0:
                stack.append((i - 1, k, offset))
                continue
            out[offset + first] = i
            stack.append((i - 1, first - 1, offset))
            stack.append((i, k - first, offset + first))
        return out[1:]


def fill_table(distances, turnovers, days: int) -> DpTable:
    n = len(distances)
    scale = lcm(1, *(Fraction(d).denominator for d in distances))
    steps = [int(Fraction(d) * scale) for d in distances]
    phi = [[0] * (days + 1) for _ in range(n + 1)]
    choice = [[0] * (days + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        d, tau = steps[i - 1], turnovers[i - 1]
        prev, row, pick = phi[i - 1], phi[i], choice[i]
        for k in range(1, days + 1):
            if k < tau:
                row[k] = prev[k]
                continue
            best, arg = prev[0] + d + row[k - 1], 1
            for first in range(2, tau + 1):
                cand = prev[first - 1] + d + row[k - first]
                if cand < best:
                    best, arg = cand, first
            row[k], pick[k] = best, arg
    return DpTable([[Fraction(v, scale) for v in row] for row in phi], choice)


def _check_halfline(distances, turnovers):
    if len(distances) != len(turnovers) or not distances:
        raise InstanceError("halfline_dp needs equally many distances and turnovers")
    if any(b < a for a, b in zip(distances, distances[1:])):
        raise InstanceError("halfline_dp needs ascending distances", list(distances))
    if any(b <= a for a, b in zip(turnovers, turnovers[1:])):
        raise InstanceError("halfline_dp needs strictly ascending turnovers", list(turnovers))
    if turnovers[-1] > Config.LINE_DP_MAX_TURNOVER:
        raise SizeGuardError(
            f"halfline_dp turnover {turnovers[-1]} exceeds guard {Config.LINE_DP_MAX_TURNOVER}")


def halfline_plan(distances, turnovers) -> tuple:
    """Optimal block: returns (one-way value, block length, per-day reach)."""
    distances = [Fraction(d) for d in distances]
    turnovers = list(turnovers)
    _check_halfline(distances, turnovers)
    n = len(distances)
    top = turnovers[-1]
    table = fill_table(distances[:-1], turnovers[:-1], top - 1)

    best, length = None, 0
    for block in range(1, top + 1):
        value = (table.phi[n - 1][block - 1] + distances[-1]) / block
        if best is None or value < best:
            best, length = value, block
    reach = table.reach(n - 1, length - 1) + [n]
    logger.debug("halfline_dp: %d vertices, block %d, one-way value %s", n, length, best)
    return best, length, reach


def halfline_dp(distances, turnovers, ids=None) -> tuple:
    """Round-trip optimum of a pruned half-line and its congruence classes.

    Vertices are named by ``ids`` (default 1..n); day d of the block serves
    every vertex up to its reach.
    """
    value, length, reach = halfline_plan(distances, turnovers)
    ids = list(ids) if ids is not None else list(range(1, len(distances) + 1))
    classes = tuple(
        CongruenceClass(day % length, length, frozenset(ids[:far]))
        for day, far in enumerate(reach, start=1) if far
    )
    return 2 * value, CompactSchedule(classes)


def _sides(instance: Instance) -> list:
    """Each half-line as a list of (vertex, depot distance), nearest first."""
    tree = root_tree(instance)
    sides = []
    for first in tree.children[tree.root]:
        chain, v = [], first
        while True:
            chain.append((v, tree.depth[v]))
            if not tree.children[v]:
                break
            v = tree.children[v][0]
        sides.append(chain)
    return sides


def solve_minavg_line(instance: Instance):
    started = time.perf_counter()
    norm, topology, events = normalize(instance)
    if not topology.is_line:
        raise TopologyError(f"line-dp needs a line instance, {instance.name} is {topology.value}")

    total = Fraction(0)
    plans = []
    for chain in _sides(norm):
        taus = [norm.tau(v) for v, _ in chain]
        kept = [p for p in range(len(chain)) if p == len(chain) - 1 or taus[p] < taus[p + 1]]
        value, length, reach = halfline_plan(
            [chain[p][1] for p in kept], [taus[p] for p in kept])
        total += 2 * value
        limits = [chain[kept[far - 1]][1] if far else None for far in reach]
        plans.append((chain, length, limits))

    lower = general_lower_bound(instance, Objective.MIN_AVG.value)
    period = lcm(*(length for _, length, _ in plans)) if plans else 1
    diagnostics = {
        "topology": topology.value,
        "pruned": len(events),
        "blocks": [length for _, length, _ in plans],
        "dp_value": str(total),
    }
    if period > Config.LINE_PERIOD_CAP:
        logger.warning("line-dp on %s: period %d above cap %d, reporting value only",
                       instance.name, period, Config.LINE_PERIOD_CAP)
        diagnostics["value_only"] = True
        report = SolveReport('line-dp', Objective.MIN_AVG.value, instance.name, period=period,
                             avg=total, lower_bound=lower,
                             runtime_ms=int((time.perf_counter() - started) * 1000),
                             diagnostics=diagnostics)
        return None, report

    days = []
    for day in range(1, period + 1):
        visits = []
        for chain, length, limits in plans:
            limit = limits[(day - 1) % length]
            if limit is not None:
                visits.extend(v for v, depth in chain if depth <= limit)
        days.append(tuple(visits))
    schedule = Schedule(period, tuple(days))

    report = make_report(instance, schedule, 'line-dp', Objective.MIN_AVG.value, lower,
                         started, diagnostics)
    if report.avg != total:
        raise InvariantViolation(f"line-dp schedule avg {report.avg} differs from DP value {total}")
    return schedule, report
