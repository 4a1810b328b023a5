"""
Exact ground truth for small instances.

A configuration is the tuple of remaining slacks r_j ∈ {1..τ_j}; visiting a
set S resets r_j to τ_j for j ∈ S and decrements every other slack, which
must stay ≥ 1. Every cyclic schedule is a cycle of this graph, and every
cycle is reachable from the fresh configuration (all slacks full) because
it has at least as much slack as any state. So MIN-AVG is the minimum mean
cycle and MIN-MAX the smallest threshold under which a cycle survives.
Only periodic schedules are searched.
"""
import logging
import time
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from math import prod

import networkx as nx

from config import Config
from models import Instance, InvariantViolation, Objective, Schedule, SizeGuardError
from services.general_solver import general_lower_bound
from services.instance_service import metric_closure, validate_instance
from services.routing_service import SubsetTours
from services.schedule_service import make_report

logger = logging.getLogger('rftt.oracle')

HOWARD_MAX_ITERATIONS = 10_000


@dataclass
class ConfigurationGraph:
    states: list           # slack tuples; index 0 is the fresh state
    succ: list             # per state: list of (target index, label, cost)

    def cycle_from(self, start: int, pick) -> list:
        """Follow ``pick(state) -> edge`` from ``start`` until a state repeats; returns the cycle's edges."""
        seen, path = {}, []
        v = start
        while v not in seen:
            seen[v] = len(path)
            edge = pick(v)
            path.append((v, edge))
            v = edge[0]
        return [edge for _, edge in path[seen[v]:]]


def _guard(turnovers, max_states: int, max_clients: int | None, what: str):
    if max_clients is not None and len(turnovers) > max_clients:
        raise SizeGuardError(f"{what} on {len(turnovers)} clients exceeds guard {max_clients}")
    states = prod(turnovers)
    if states > max_states:
        raise SizeGuardError(f"{what} state space {states} exceeds guard {max_states}")


def explore(turnovers, moves) -> ConfigurationGraph:
    """Breadth-first enumeration of configurations reachable from fresh.

    ``moves(state)`` yields (label, reset mask) pairs; invalid moves are
    dropped here.
    """
    fresh = tuple(turnovers)
    index = {fresh: 0}
    states, succ = [fresh], []
    queue = deque([fresh])
    while queue:
        state = queue.popleft()
        out = []
        for label, mask in moves(state):
            nxt = []
            for j, (r, tau) in enumerate(zip(state, turnovers)):
                if mask >> j & 1:
                    nxt.append(tau)
                elif r > 1:
                    nxt.append(r - 1)
                else:
                    break
            else:
                nxt = tuple(nxt)
                if nxt not in index:
                    index[nxt] = len(states)
                    states.append(nxt)
                    queue.append(nxt)
                out.append((index[nxt], label))
        succ.append(out)
    return ConfigurationGraph(states, [[(w, label, None) for w, label in out] for out in succ])


def _subset_moves(n: int):
    everyone = (1 << n) - 1

    def moves(state):
        forced = 0
        for j, r in enumerate(state):
            if r == 1:
                forced |= 1 << j
        free = everyone & ~forced
        sub = free
        while True:
            yield forced | sub, forced | sub
            if sub == 0:
                break
            sub = (sub - 1) & free
    return moves


def _instance_graph(instance: Instance, max_states, max_clients):
    validate_instance(instance)
    clients = instance.clients
    turnovers = [instance.turnover(j) for j in clients]
    _guard(turnovers, max_states or Config.ORACLE_MAX_STATES,
           max_clients or Config.ORACLE_MAX_CLIENTS, "oracle")
    table = SubsetTours(clients, metric_closure(instance), instance.depot)
    graph = explore(turnovers, _subset_moves(len(clients)))
    graph.succ = [[(w, mask, table.cost(mask)) for w, mask, _ in out] for out in graph.succ]
    logger.debug("oracle on %s: %d configurations", instance.name, len(graph.states))
    return graph, table


def _schedule(table: SubsetTours, masks) -> Schedule:
    days = tuple(table.order(mask) for mask in masks)
    return Schedule(len(days), days)


# ---------------------------------------------------------------------------
# MIN-AVG: minimum mean cycle by policy iteration
# ---------------------------------------------------------------------------

def _evaluate_policy(graph: ConfigurationGraph, policy: list) -> tuple:
    n = len(graph.states)
    eta, bias = [None] * n, [None] * n

    def step(v):
        return graph.succ[v][policy[v]]

    for start in range(n):
        if eta[start] is not None:
            continue
        path, on_path, v = [], {}, start
        while eta[v] is None and v not in on_path:
            on_path[v] = len(path)
            path.append(v)
            v = step(v)[0]
        if eta[v] is None:
            cycle = path[on_path[v]:]
            path = path[:on_path[v]]
            mean = sum((step(u)[2] for u in cycle), Fraction(0)) / len(cycle)
            ref = cycle.index(min(cycle))
            cycle = cycle[ref:] + cycle[:ref]
            eta[cycle[0]], bias[cycle[0]] = mean, Fraction(0)
            for u in reversed(cycle[1:]):
                w, _, cost = step(u)
                eta[u], bias[u] = mean, cost - mean + bias[w]
        for u in reversed(path):
            w, _, cost = step(u)
            eta[u] = eta[w]
            bias[u] = cost - eta[u] + bias[w]
    return eta, bias


def min_mean_cycle(graph: ConfigurationGraph) -> tuple:
    """Howard's policy iteration with exact arithmetic; returns (mean, cycle edges)."""
    policy = [min(range(len(out)), key=lambda k: out[k][2]) for out in graph.succ]
    for iteration in range(HOWARD_MAX_ITERATIONS):
        eta, bias = _evaluate_policy(graph, policy)
        changed = False
        for v, out in enumerate(graph.succ):
            best = min(range(len(out)), key=lambda k: eta[out[k][0]])
            if eta[out[best][0]] < eta[v]:
                policy[v], changed = best, True
        if not changed:
            for v, out in enumerate(graph.succ):
                current = bias[v]
                for k, (w, _, cost) in enumerate(out):
                    if eta[w] != eta[v]:
                        continue
                    value = cost - eta[v] + bias[w]
                    if value < current:
                        policy[v], current, changed = k, value, True
        if not changed:
            logger.debug("policy iteration converged after %d rounds", iteration + 1)
            break
    else:
        raise InvariantViolation(f"policy iteration did not converge in {HOWARD_MAX_ITERATIONS} rounds")

    best = min(range(len(eta)), key=lambda v: (eta[v], v))
    cycle = graph.cycle_from(best, lambda v: graph.succ[v][policy[v]])
    return eta[best], cycle


def exact_minavg(instance: Instance, max_states: int | None = None,
                 max_clients: int | None = None) -> tuple:
    if not instance.clients:
        return Fraction(0), Schedule(1, ((),))
    graph, table = _instance_graph(instance, max_states, max_clients)
    value, cycle = min_mean_cycle(graph)
    return value, _schedule(table, [mask for _, mask, _ in cycle])


# ---------------------------------------------------------------------------
# MIN-MAX and Pinwheel: surviving cycles
# ---------------------------------------------------------------------------

def _restricted(graph: ConfigurationGraph, threshold) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(range(len(graph.states)))
    for v, out in enumerate(graph.succ):
        for w, label, cost in out:
            if threshold is None or cost <= threshold:
                g.add_edge(v, w, label=label)
    return g


def prune_dead(g: nx.DiGraph) -> nx.DiGraph:
    """Greatest fixed point: repeatedly delete states without a successor."""
    queue = deque(v for v in g if g.out_degree(v) == 0)
    while queue:
        v = queue.popleft()
        if v not in g:
            continue
        preds = list(g.predecessors(v))
        g.remove_node(v)
        queue.extend(p for p in preds if g.out_degree(p) == 0)
    return g


def surviving_cycle(g: nx.DiGraph) -> list | None:
    """Labels of a cycle reached from the fresh state, or None if it dies."""
    prune_dead(g)
    if 0 not in g:
        return None
    seen, path, v = {}, [], 0
    while v not in seen:
        seen[v] = len(path)
        w = min(g.successors(v))
        path.append(g[v][w]['label'])
        v = w
    return path[seen[v]:]


def exact_minmax(instance: Instance, max_states: int | None = None,
                 max_clients: int | None = None) -> tuple:
    if not instance.clients:
        return Fraction(0), Schedule(1, ((),))
    graph, table = _instance_graph(instance, max_states, max_clients)
    costs = sorted({cost for out in graph.succ for _, _, cost in out})

    lo, hi, witness = 0, len(costs) - 1, None
    while lo < hi:
        mid = (lo + hi) // 2
        found = surviving_cycle(_restricted(graph, costs[mid]))
        if found is None:
            lo = mid + 1
        else:
            hi, witness = mid, found
    if witness is None:
        witness = surviving_cycle(_restricted(graph, costs[lo]))
    if witness is None:
        raise InvariantViolation(f"no cycle survives at the largest day cost {costs[-1]}")
    return costs[lo], _schedule(table, witness)


@dataclass(frozen=True)
class PinwheelResult:
    feasible: bool
    witness: tuple = ()     # job index per day, None for an idle day

    def as_dict(self, periods) -> dict:
        return {
            "periods": list(periods),
            "density": str(density(periods)),
            "feasible": self.feasible,
            "witness": list(self.witness),
        }


def density(periods) -> Fraction:
    return sum((Fraction(1, p) for p in periods), Fraction(0))


def pinwheel_feasible(periods, max_states: int | None = None) -> PinwheelResult:
    periods = list(periods)
    if not periods or any(not isinstance(p, int) or p < 1 for p in periods):
        raise ValueError(f"pinwheel periods must be positive integers, got {periods}")
    _guard(periods, max_states or Config.PINWHEEL_MAX_STATES, None, "pinwheel")

    def moves(state):
        forced = [j for j, r in enumerate(state) if r == 1]
        if len(forced) > 1:
            return
        if forced:
            yield forced[0], 1 << forced[0]
            return
        yield None, 0
        for j in range(len(state)):
            yield j, 1 << j

    graph = explore(periods, moves)
    g = nx.DiGraph()
    g.add_nodes_from(range(len(graph.states)))
    for v, out in enumerate(graph.succ):
        for w, label, _ in out:
            g.add_edge(v, w, label=label)
    cycle = surviving_cycle(g)
    logger.debug("pinwheel %s: %d configurations, feasible=%s",
                 periods, len(graph.states), cycle is not None)
    if cycle is None:
        return PinwheelResult(False)
    return PinwheelResult(True, tuple(cycle))


def solve_oracle(instance: Instance, objective: str, max_states: int | None = None,
                 max_clients: int | None = None):
    started = time.perf_counter()
    if objective == Objective.MIN_AVG.value:
        value, schedule = exact_minavg(instance, max_states, max_clients)
    else:
        value, schedule = exact_minmax(instance, max_states, max_clients)
    report = make_report(instance, schedule, 'oracle', objective,
                         general_lower_bound(instance, objective), started, {"value": str(value)})
    if report.cost != value:
        raise InvariantViolation(f"oracle witness costs {report.cost}, expected {value}")
    return schedule, report
