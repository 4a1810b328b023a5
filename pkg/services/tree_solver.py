"""
Tree-metric solvers: tt-weights and the lower bound L(G,τ), the
synchronized MIN-AVG 2-approximation, and the congruence-class recursion
with per-day tour assembly for the MIN-MAX 6-approximation.
"""
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from models import (
    CompactSchedule, CongruenceClass, DistanceMatrix, Instance, InstanceError, InvariantViolation,
    Objective, Schedule, Tour, TopologyError,
)
from services.general_solver import is_power_of_two, round_pow2
from services.instance_service import (
    RootedTree, max_depot_distance, metric_closure, normalize, root_tree,
)
from services.routing_service import walk
from services.schedule_service import make_report

logger = logging.getLogger('rftt.tree')


@dataclass(frozen=True)
class TTWeightedTree:
    instance: Instance
    tree: RootedTree
    q: dict     # (parent, child) -> min turnover beneath the edge
    tau: dict   # client -> effective turnover


@dataclass
class CongruenceAssignment:
    f: dict = field(default_factory=dict)        # (residue, modulus) -> frozenset of edges
    g: dict = field(default_factory=dict)        # (residue, modulus) -> frozenset of vertices
    bridges: dict = field(default_factory=dict)  # (residue, modulus) -> edges joining split-off vertices to T
    anchors: dict = field(default_factory=dict)  # (residue, modulus) -> edge whose root path joins T to the depot
    call_count: int = 0
    split_clients: int = 0
    cost_checks: int = 0
    max_modulus: int = 1


def tt_weights(instance: Instance) -> TTWeightedTree:
    tree = root_tree(instance)
    tau = {j: instance.tau(j) for j in instance.clients}
    below = {}
    for v in reversed(tree.order):
        vals = [below[c] for c in tree.children[v]]
        if v != tree.root:
            vals.append(tau[v])
        below[v] = min(vals) if vals else None
    q = {(tree.parent[v], v): below[v] for v in tree.order if v != tree.root}
    return TTWeightedTree(instance, tree, q, tau)


def tree_lower_bound(tt: TTWeightedTree) -> Fraction:
    return 2 * sum((tt.tree.weight[c] / q for (_, c), q in tt.q.items()), Fraction(0))


def minmax_lower_bound(instance: Instance) -> Fraction:
    """max(L(G,τ), 2·max depot distance) for a normalized tree instance."""
    return max(tree_lower_bound(tt_weights(instance)), 2 * max_depot_distance(instance))


def euler_sequence(tree: RootedTree) -> list:
    """Directed edges of the doubled tree in smallest-child-first DFS order."""
    seq = []
    stack = [(tree.root, iter(tree.children[tree.root]))]
    while stack:
        v, kids = stack[-1]
        child = next(kids, None)
        if child is None:
            stack.pop()
            if stack:
                seq.append((v, stack[-1][0]))
            continue
        seq.append((v, child))
        stack.append((child, iter(tree.children[child])))
    return seq


def steiner_preorder(tree: RootedTree, targets) -> list:
    """Targets in DFS preorder of the subtree joining them to the root."""
    keep = set()
    for v in targets:
        while v not in keep and v != tree.root:
            keep.add(v)
            v = tree.parent[v]
    wanted = set(targets)
    out, stack = [], [tree.root]
    while stack:
        v = stack.pop()
        if v in wanted and v != tree.root:
            out.append(v)
        stack.extend(reversed([c for c in tree.children[v] if c in keep]))
    return out


# ---------------------------------------------------------------------------
# MIN-AVG
# ---------------------------------------------------------------------------

def synchronized_classes(instance: Instance) -> CompactSchedule:
    by_tau: dict = {}
    for j in instance.clients:
        by_tau.setdefault(instance.tau(j), set()).add(j)
    return CompactSchedule(tuple(
        CongruenceClass(0, m, frozenset(members)) for m, members in sorted(by_tau.items())
    ))


def solve_minavg_tree(instance: Instance):
    started = time.perf_counter()
    norm, topology, events = normalize(instance)
    if not topology.is_tree:
        raise TopologyError(f"tree2 needs a tree instance, {instance.name} is {topology.value}")
    rounded = round_pow2(norm)
    tree = root_tree(rounded)
    compact = synchronized_classes(rounded)
    period = compact.period

    days = []
    for day in range(1, period + 1):
        days.append(tuple(steiner_preorder(tree, sorted(compact.vertices_on(day)))))
    schedule = Schedule(period, tuple(days))

    lower = tree_lower_bound(tt_weights(norm))
    report = make_report(instance, schedule, 'tree2', Objective.MIN_AVG.value, lower, started, {
        "topology": topology.value,
        "pruned": len(events),
        "classes": len(compact.classes),
    })
    if report.avg > 2 * lower:
        raise InvariantViolation(f"tree2 avg {report.avg} exceeds 2·L = {2 * lower}")
    if rounded == norm and report.avg != lower:
        raise InvariantViolation(f"tree2 avg {report.avg} differs from L = {lower} on power-of-two input")
    return schedule, report


# ---------------------------------------------------------------------------
# MIN-MAX: congruence-class recursion
# ---------------------------------------------------------------------------

def _bridge(tree: RootedTree, v: int, reached: set) -> frozenset:
    """Root-ward edges from v up to the first vertex already in ``reached``."""
    path = []
    while v not in reached:
        path.append((tree.parent[v], v))
        v = tree.parent[v]
    return frozenset(path)


def recurse_tree_schedule(instance: Instance) -> CongruenceAssignment:
    """Assign edges (f) and vertices (g) to congruence classes of days.

    Starts from the doubled-tree Euler sequence with class 0 mod 1. Each call
    takes edges with tt-weight m into f(a mod m) and not-yet-assigned vertices
    with turnover m into g(a mod m), then splits the sequence where the
    prefix of c(e)/q(e) over heavier edges reaches half its total, recursing
    on (d¹, a, 2m) and (d², a + m, 2m).

    Dropping the split edge can leave an end vertex of the sequence in
    neither half. Such a vertex goes straight into g(a mod τ_v), together
    with a bridge: its root-ward path up to the f edges of the calls above
    it, which every day of that class already routes through.

    Costs are compared on integers scaled by the common denominator of
    every c(e)/q(e). The per-call cost inequality is checked on every call.
    """
    tt = tt_weights(instance)
    for j, t in tt.tau.items():
        if not is_power_of_two(t):
            raise InstanceError(f"non-power-of-two turnover {t} at vertex {j}", j)

    tree, q = tt.tree, tt.q
    tau_max = max(tt.tau.values(), default=1)
    out = CongruenceAssignment(max_modulus=tau_max)
    assigned: set = set()

    scale = tau_max * lcm(1, *(tree.weight[c].denominator for _, c in q))
    ratio = {e: int(tree.weight[e[1]] * scale) // q[e] for e in q}
    cost = {e: int(tree.weight[e[1]] * scale) for e in q}
    bound = 2 * sum(ratio.values())

    def undirected(e):
        return e if tree.parent.get(e[1]) == e[0] else (e[1], e[0])

    stack = [(tuple(undirected(e) for e in euler_sequence(tree)), 0, 1, 0, frozenset())]
    while stack:
        seq, a, m, inherited, above = stack.pop()
        out.call_count += 1
        key = (a, m)

        f_set = frozenset(e for e in seq if q[e] == m)
        touched = {v for e in seq for v in e if v != tree.root}
        g_set = frozenset(v for v in touched if tt.tau[v] == m and v not in assigned)
        assigned |= g_set
        out.f[key] = f_set
        out.g[key] = out.g.get(key, frozenset()) | g_set
        out.anchors[key] = min(f_set or seq, key=lambda e: (tree.depth[e[1]], e[1]))

        lhs = inherited + m * sum(ratio[e] for e in seq if q[e] >= m)
        out.cost_checks += 1
        if lhs > bound:
            raise InvariantViolation(
                f"call {a} mod {m}: cost {Fraction(lhs, scale)} exceeds L = {Fraction(bound, scale)}")

        if 2 * m > tau_max:
            continue

        heavy = [ratio[e] if q[e] > m else 0 for e in seq]
        total = sum(heavy)
        k, running = 1, 0
        for i in range(len(seq) - 1):
            running += heavy[i]
            if 2 * running > total:
                break
            k = i + 2
        first, second = seq[:k - 1], seq[k:]

        above = above | f_set
        kept = {v for e in first + second for v in e}
        reached = {tree.root} | {v for e in above for v in e}
        for v in sorted(touched - kept - assigned):
            split_key = (a % tt.tau[v], tt.tau[v])
            out.g[split_key] = out.g.get(split_key, frozenset()) | {v}
            out.bridges[split_key] = out.bridges.get(split_key, frozenset()) | _bridge(tree, v, reached)
            out.split_clients += 1
            assigned.add(v)

        passed = inherited + sum(cost[e] for e in f_set)
        if second:
            stack.append((second, a + m, 2 * m, passed, above))
        if first:
            stack.append((first, a, 2 * m, passed, above))

    missing = set(tt.tau) - assigned
    if missing:
        raise InvariantViolation(f"vertices never assigned to a class: {sorted(missing)}")
    if out.call_count > 2 * max(len(q), 1):
        raise InvariantViolation(f"{out.call_count} calls exceed 2|E| = {2 * len(q)}")
    logger.debug("recursion on %s: %d calls, %d classes, %d split-off clients", instance.name,
                 out.call_count, len(out.g), out.split_clients)
    return out


def day_edges(assignment: CongruenceAssignment, tree: RootedTree, day: int) -> tuple:
    """(targets, T) for one day: T = P ∪ f ∪ bridges over the day's classes,
    P being the root path of the deepest sequence call's anchor."""
    targets, edges, deepest = set(), set(), None
    m = 1
    while m <= assignment.max_modulus:
        key = (day % m, m)
        targets |= assignment.g.get(key, frozenset())
        edges |= assignment.f.get(key, frozenset())
        edges |= assignment.bridges.get(key, frozenset())
        if key in assignment.anchors:
            deepest = key
        m *= 2
    if targets and deepest is not None:
        edges |= set(tree.root_path(assignment.anchors[deepest][1]))
    return targets, edges


def assemble_day_tour(assignment: CongruenceAssignment, tt: TTWeightedTree, day: int,
                      dist: DistanceMatrix | None = None) -> Tour:
    tree = tt.tree
    targets, edges = day_edges(assignment, tree, day)
    if not targets:
        return Tour.idle(tree.root)

    covered = {c for _, c in edges}
    connected = all(p == tree.root or (tree.parent[p], p) in edges for p, _ in edges)
    if not connected or not targets <= covered:
        raise InvariantViolation(
            f"day {day}: T is not a depot-rooted tree spanning clients {sorted(targets - covered)}")

    # DFS of T cut down to the targets is the preorder of their Steiner subtree
    order = steiner_preorder(tree, sorted(targets))
    return walk((tree.root, *order, tree.root), dist or metric_closure(tt.instance))


def solve_minmax_tree(instance: Instance):
    started = time.perf_counter()
    norm, topology, events = normalize(instance)
    if not topology.is_tree:
        raise TopologyError(f"tree6 needs a tree instance, {instance.name} is {topology.value}")
    rounded = round_pow2(norm)
    assignment = recurse_tree_schedule(rounded)
    tt = tt_weights(rounded)
    dist = metric_closure(rounded)
    period = assignment.max_modulus if rounded.clients else 1

    tours = [assemble_day_tour(assignment, tt, day, dist) for day in range(1, period + 1)]
    schedule = Schedule.from_tours(tours)

    lower = minmax_lower_bound(norm)
    report = make_report(instance, schedule, 'tree6', Objective.MIN_MAX.value, lower, started, {
        "topology": topology.value,
        "pruned": len(events),
        "call_count": assignment.call_count,
        "cost_checks": assignment.cost_checks,
        "edges": len(tt.q),
        "split_clients": assignment.split_clients,
    })
    if report.max > 6 * lower:
        raise InvariantViolation(f"tree6 max {report.max} exceeds 6·LB = {6 * lower}")
    return schedule, report
