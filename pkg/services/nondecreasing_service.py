"""
Synchronized and non-decreasing solutions.

A synchronized solution (power-of-two turnovers) visits a client with
turnover 2^i exactly on the days divisible by 2^i. A non-decreasing
solution routes each day along a depot-rooted arborescence whose turnovers
never decrease away from the depot. This module builds such trees from
edge-disjoint pairings and converts between the two solution kinds.
"""
import logging
import time
from dataclasses import dataclass
from fractions import Fraction

import networkx as nx

from models import (
    Instance, InvariantViolation, Objective, Schedule, SolutionKindError, Vertex,
)
from services.general_solver import (
    ceil_log2, general_lower_bound, is_power_of_two, round_pow2, solve_minavg_sync,
    synchronized_tours, two_adic,
)
from services.instance_service import metric_closure, normalize
from services.routing_service import minimum_spanning_tree, preorder, tree_weight
from services.schedule_service import make_report, verify

logger = logging.getLogger('rftt.nondecreasing')

SYNCHRONIZED = 'synchronized'
NONDECREASING = 'nondecreasing'
DIRECTIONS = ('sync->nondecr', 'nondecr->sync')


@dataclass(frozen=True)
class NonDecreasingTree:
    root: int
    arcs: tuple     # (tail, head, cost); tail turnover ≤ head turnover
    rounds: int = 0

    @property
    def cost(self) -> Fraction:
        return sum((c for _, _, c in self.arcs), Fraction(0))

    @property
    def vertices(self) -> set:
        return {self.root} | {h for _, h, _ in self.arcs}

    def parent_map(self) -> dict:
        return {h: t for t, h, _ in self.arcs}

    def root_path(self, v: int) -> list:
        """Arcs from the root down to ``v``, deepest last."""
        up = self.parent_map()
        path = []
        while v != self.root:
            path.append((up[v], v))
            v = up[v]
        return list(reversed(path))

    def preorder(self) -> list:
        g = nx.Graph()
        g.add_node(self.root)
        g.add_edges_from((t, h) for t, h, _ in self.arcs)
        return preorder(g, self.root)


@dataclass(frozen=True)
class RoutedSolution:
    kind: str
    schedule: Schedule
    trees: tuple = ()   # one NonDecreasingTree per day for non-decreasing solutions

    @property
    def tree_avg(self) -> Fraction | None:
        if not self.trees:
            return None
        return sum((t.cost for t in self.trees), Fraction(0)) / len(self.trees)


# ---------------------------------------------------------------------------
# Pairing rounds
# ---------------------------------------------------------------------------

def tree_pairing(tree: nx.Graph, subset) -> list:
    """Pair a largest even part of ``subset`` with edge-disjoint tree paths.

    Bottom-up from the smallest-id vertex: every subtree hands at most one
    unpaired vertex to its parent, so each tree edge carries at most one path.
    """
    subset = set(subset)
    if not subset:
        return []
    root = min(tree.nodes)
    order = preorder(tree, root)
    position = {v: i for i, v in enumerate(order)}
    pending: dict = {}
    pairs = []
    for v in reversed(order):
        carry = [pending[c] for c in sorted(tree[v]) if position[c] > position[v]
                 and c in pending and pending[c] is not None]
        if v in subset:
            carry.append(v)
        while len(carry) >= 2:
            a, b = carry.pop(0), carry.pop(0)
            pairs.append((min(a, b), max(a, b)))
        pending[v] = carry[0] if carry else None
    return sorted(pairs)


def pairing_cost(tree: nx.Graph, subset) -> Fraction:
    """Cost of the bottom-up pairing: the edges with an odd subset count beneath."""
    subset = set(subset)
    root = min(tree.nodes)
    order = preorder(tree, root)
    position = {v: i for i, v in enumerate(order)}
    count: dict = {}
    total = Fraction(0)
    for v in reversed(order):
        below = [c for c in tree[v] if position[c] > position[v]]
        count[v] = (v in subset) + sum(count[c] for c in below)
        total += sum((tree[v][c]['weight'] for c in below if count[c] % 2), Fraction(0))
    return total


def build_nondecreasing_tree(tree: nx.Graph, turnovers: dict, depot: int) -> NonDecreasingTree:
    """Repeatedly pair the surviving vertices and hang each pair's
    higher-turnover end below its lower-turnover end.

    ``turnovers`` covers every vertex but the depot, which ranks lowest.
    Returns an arborescence rooted at the depot.
    """
    if not nx.is_tree(tree):
        raise InvariantViolation("build_nondecreasing_tree needs a tree")
    paths = dict(nx.all_pairs_dijkstra_path_length(tree, weight='weight'))

    def rank(v):
        return (0 if v == depot else turnovers[v], v)

    survivors = sorted(tree.nodes)
    n = len(survivors)
    arcs, rounds = [], 0
    while len(survivors) > 1:
        rounds += 1
        chosen = survivors
        if len(survivors) % 2:
            # leave out the vertex whose removal gives the cheapest pairing
            left_out = min(survivors, key=lambda x: (
                pairing_cost(tree, [v for v in survivors if v != x]), x))
            chosen = [v for v in survivors if v != left_out]
        dropped = set()
        for u, v in tree_pairing(tree, chosen):
            tail, head = sorted((u, v), key=rank)
            arcs.append((tail, head, Fraction(paths[u][v])))
            dropped.add(head)
        survivors = [v for v in survivors if v not in dropped]
        logger.debug("nondecreasing round %d: %d survivors", rounds, len(survivors))

    out = NonDecreasingTree(depot, tuple(arcs), rounds)
    if survivors and survivors[0] != depot:
        raise InvariantViolation(f"root {survivors[0]} is not the depot {depot}")
    limit = ceil_log2(n)
    if rounds > limit:
        raise InvariantViolation(f"{rounds} rounds exceed ⌈log₂ n⌉ = {limit}")
    for t, h, _ in arcs:
        if rank(t) > rank(h):
            raise InvariantViolation(f"arc {t}->{h} decreases turnover")
    if out.cost > limit * tree_weight(tree):
        raise InvariantViolation(f"tree cost {out.cost} exceeds {limit}·c(T)")
    return out


# ---------------------------------------------------------------------------
# Solution kinds
# ---------------------------------------------------------------------------

def _sync_instance(instance: Instance) -> Instance:
    """The power-of-two instance synchronized solutions are defined on."""
    norm, _, _ = normalize(instance)
    return round_pow2(norm)


def _contract(rounded: Instance) -> Instance:
    """Same graph with the rounded turnovers as the contract."""
    vertices = tuple(v if v.is_depot else Vertex(v.id, rounded.tau(v.id)) for v in rounded.vertices)
    return Instance(rounded.name, rounded.depot, vertices, rounded.edges)


def is_synchronized(rounded: Instance, schedule: Schedule) -> bool:
    if not is_power_of_two(schedule.period):
        return False
    for day in range(1, schedule.period + 1):
        visited = set(schedule.visits(day)) - {rounded.depot}
        wanted = {j for j in rounded.clients if day % rounded.tau(j) == 0}
        if visited != wanted:
            return False
    return True


def synchronized_solution(instance: Instance) -> RoutedSolution:
    schedule, _ = solve_minavg_sync(instance)
    return RoutedSolution(SYNCHRONIZED, schedule)


def _dedupe(stops, keep) -> list:
    out, seen = [], set()
    for v in stops:
        if v in keep and v not in seen:
            out.append(v)
            seen.add(v)
    return out


def sync_to_nondecr(instance: Instance, solution: RoutedSolution) -> RoutedSolution:
    """Day tours as concatenated shortcuts of the cheapest tour of each level.

    The level of day d is the exponent of the largest power of two dividing
    it (capped at the top level). The level-i tour is shortcut to the
    clients with turnover exactly 2^i; day d of level j runs those pieces for
    levels 0..j, and each piece is a non-decreasing path below the depot.
    """
    if solution.kind != SYNCHRONIZED:
        raise SolutionKindError(f"expected a synchronized solution, got {solution.kind}")
    rounded = _sync_instance(instance)
    schedule = solution.schedule
    if not is_synchronized(rounded, schedule):
        raise SolutionKindError("schedule is not synchronized on power-of-two turnovers")
    dist = metric_closure(instance)
    depot = rounded.depot
    top = schedule.period.bit_length() - 1

    best: dict = {}
    for day in range(1, schedule.period + 1):
        level = min(two_adic(day), top)
        cost = dist.walk_cost(schedule.tour(day, depot))
        if level not in best or cost < best[level][0]:
            best[level] = (cost, schedule.visits(day))
    pieces = [
        _dedupe(best[level][1], {j for j in rounded.clients if rounded.tau(j) == 1 << level})
        for level in range(top + 1)
    ]

    days, trees = [], []
    for day in range(1, schedule.period + 1):
        level = min(two_adic(day), top)
        stops, arcs = [], []
        for piece in pieces[:level + 1]:
            if not piece:
                continue
            if stops:
                stops.append(depot)
            stops.extend(piece)
            chain = [depot, *piece]
            arcs.extend((a, b, dist(a, b)) for a, b in zip(chain, chain[1:]))
        days.append(tuple(stops))
        trees.append(NonDecreasingTree(depot, tuple(arcs)))
    return RoutedSolution(NONDECREASING, Schedule(schedule.period, tuple(days)), tuple(trees))


def nondecr_to_sync(instance: Instance, solution: RoutedSolution) -> RoutedSolution:
    """Move tree edges forward to the next day divisible by 2^j.

    Levels j = 0, 1, … in turn: for every day i and every client of turnover
    2^j in day i's tree, the not-yet-marked arcs of its root path are marked
    and handed to day ⌈i/2^j⌉·2^j. Day k then routes a preorder of the
    handed arcs cut down to the clients whose turnover divides k.
    """
    if solution.kind != NONDECREASING:
        raise SolutionKindError(f"expected a non-decreasing solution, got {solution.kind}")
    rounded = _sync_instance(instance)
    source = solution.schedule
    if not is_power_of_two(source.period) or len(solution.trees) != source.period:
        raise SolutionKindError("non-decreasing solution needs a power-of-two period and one tree per day")
    if not verify(_contract(rounded), source).feasible:
        raise SolutionKindError("non-decreasing solution misses a power-of-two turnover")
    depot = rounded.depot
    tau_max = max((rounded.tau(j) for j in rounded.clients), default=1)
    period = max(source.period, tau_max)

    marked = {day: set() for day in range(1, period + 1)}
    handed = {day: set() for day in range(1, period + 1)}
    for level in range(tau_max.bit_length()):
        step = 1 << level
        for day in range(1, period + 1):
            tree = solution.trees[(day - 1) % source.period]
            target = -(-day // step) * step
            for v in sorted(tree.vertices):
                if v == depot or rounded.tau(v) != step:
                    continue
                for arc in tree.root_path(v):
                    if arc not in marked[day]:
                        marked[day].add(arc)
                        handed[target].add(arc)

    days = []
    for day in range(1, period + 1):
        wanted = {j for j in rounded.clients if day % rounded.tau(j) == 0}
        g = nx.Graph()
        g.add_node(depot)
        g.add_edges_from(handed[day])
        reachable = nx.node_connected_component(g, depot)
        if not wanted <= reachable:
            raise InvariantViolation(f"day {day}: handed arcs miss {sorted(wanted - reachable)}")
        days.append(tuple(v for v in preorder(g, depot) if v in wanted))
    schedule = Schedule(period, tuple(days))
    logger.debug("nondecr->sync on %s: %d arcs handed", instance.name,
                 sum(len(a) for a in handed.values()))
    return RoutedSolution(SYNCHRONIZED, schedule)


def convert_sync_nondecr(instance: Instance, solution: RoutedSolution, direction: str) -> RoutedSolution:
    if direction == 'sync->nondecr':
        return sync_to_nondecr(instance, solution)
    if direction == 'nondecr->sync':
        return nondecr_to_sync(instance, solution)
    raise ValueError(f"Unsupported direction: {direction}. Use one of {', '.join(DIRECTIONS)}")


def mst_nondecreasing_solution(instance: Instance) -> RoutedSolution:
    """Non-decreasing trees built by pairing rounds over each synchronized day's MST."""
    rounded = _sync_instance(instance)
    dist = metric_closure(instance)
    depot = rounded.depot
    period, _ = synchronized_tours(rounded, dist)
    taus = rounded.taus()

    days, trees = [], []
    for day in range(1, period + 1):
        members = [j for j in rounded.clients if day % taus[j] == 0]
        mst = minimum_spanning_tree([depot, *members], dist)
        tree = build_nondecreasing_tree(mst, {j: taus[j] for j in members}, depot)
        trees.append(tree)
        days.append(tuple(v for v in tree.preorder() if v != depot))
    return RoutedSolution(NONDECREASING, Schedule(period, tuple(days)), tuple(trees))


def solve_minavg_nondecr(instance: Instance, method: str = 'convert'):
    """MIN-AVG through a non-decreasing solution.

    ``convert`` reroutes the synchronized solution; ``pairing`` builds each
    day's tree from pairing rounds over the day's MST.
    """
    started = time.perf_counter()
    if method == 'convert':
        solution = sync_to_nondecr(instance, synchronized_solution(instance))
    elif method == 'pairing':
        solution = mst_nondecreasing_solution(instance)
    else:
        raise ValueError(f"Unsupported method: {method}")
    return solution.schedule, make_report(
        instance, solution.schedule, 'nondecr', Objective.MIN_AVG.value,
        general_lower_bound(instance, Objective.MIN_AVG.value), started,
        {"method": method, "tree_avg": str(solution.tree_avg)},
    )
