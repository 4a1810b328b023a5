"""
Metric routing toolbox: exact TSP (Held-Karp), the double-tree
2-approximation, minimum spanning trees, and tour splitting.
"""
import logging
from fractions import Fraction
from itertools import combinations
from math import lcm

import networkx as nx

from config import Config
from models import DistanceMatrix, InvariantViolation, SizeGuardError, Tour

logger = logging.getLogger('rftt.routing')


def walk(order, dist: DistanceMatrix) -> Tour:
    order = tuple(order)
    return Tour(order, dist.walk_cost(order))


class SubsetTours:
    """Optimal depot tour of every subset of ``clients``, from one Held-Karp pass.

    Subsets are bitmasks over the client tuple. Distances are scaled to a
    common denominator so the table is filled with integers.
    """

    def __init__(self, clients, dist: DistanceMatrix, depot: int):
        self.clients = tuple(clients)
        self.depot = depot
        self._index = {c: i for i, c in enumerate(self.clients)}
        n = len(self.clients)

        raw = [[dist(a, b) for b in self.clients] for a in self.clients]
        raw0 = [dist(depot, c) for c in self.clients]
        self._scale = lcm(1, *(x.denominator for row in raw for x in row),
                          *(x.denominator for x in raw0))
        d = [[int(x * self._scale) for x in row] for row in raw]
        d0 = [int(x * self._scale) for x in raw0]

        size = 1 << n
        cost = [[None] * n for _ in range(size)]
        parent = [[-1] * n for _ in range(size)]
        for i in range(n):
            cost[1 << i][i] = d0[i]
        for mask in range(1, size):
            row = cost[mask]
            for last in range(n):
                c = row[last]
                if c is None:
                    continue
                dl = d[last]
                for nxt in range(n):
                    bit = 1 << nxt
                    if mask & bit:
                        continue
                    cand = c + dl[nxt]
                    cur = cost[mask | bit][nxt]
                    if cur is None or cand < cur:
                        cost[mask | bit][nxt] = cand
                        parent[mask | bit][nxt] = last

        closing = [(0, -1)] * size
        for mask in range(1, size):
            best = None
            for last in range(n):
                c = cost[mask][last]
                if c is None:
                    continue
                total = c + d0[last]
                if best is None or total < best[0]:
                    best = (total, last)
            closing[mask] = best
        self._parent = parent
        self._closing = closing

    def mask_of(self, subset) -> int:
        mask = 0
        for v in subset:
            mask |= 1 << self._index[v]
        return mask

    def members(self, mask: int) -> tuple:
        return tuple(c for i, c in enumerate(self.clients) if mask >> i & 1)

    def cost(self, mask: int) -> Fraction:
        return Fraction(self._closing[mask][0], self._scale)

    def order(self, mask: int) -> tuple:
        """Clients of ``mask`` in optimal visit order."""
        out = []
        last = self._closing[mask][1]
        while last != -1:
            out.append(self.clients[last])
            prev = self._parent[mask][last]
            mask &= ~(1 << last)
            last = prev
        return tuple(reversed(out))

    def tour(self, mask: int) -> Tour:
        return Tour((self.depot, *self.order(mask), self.depot), self.cost(mask))


def tsp_exact(clients, dist: DistanceMatrix, depot: int) -> Tour:
    clients = sorted(set(clients) - {depot})
    if len(clients) > Config.TSP_EXACT_MAX_CLIENTS:
        raise SizeGuardError(
            f"tsp_exact on {len(clients)} clients exceeds guard {Config.TSP_EXACT_MAX_CLIENTS}")
    if not clients:
        return Tour.idle(depot)
    table = SubsetTours(clients, dist, depot)
    return table.tour((1 << len(clients)) - 1)


def minimum_spanning_tree(vertices, dist: DistanceMatrix) -> nx.Graph:
    """Kruskal over the metric closure; edges enter in sorted id order so
    equal weights resolve to the smallest vertex ids."""
    g = nx.Graph()
    nodes = sorted(set(vertices))
    g.add_nodes_from(nodes)
    g.add_weighted_edges_from((u, v, dist(u, v)) for u, v in combinations(nodes, 2))
    return nx.minimum_spanning_tree(g, algorithm='kruskal')


def preorder(tree: nx.Graph, root: int) -> list:
    """Depth-first preorder, smallest neighbour first."""
    out, seen, stack = [], {root}, [root]
    while stack:
        v = stack.pop()
        out.append(v)
        kids = sorted(u for u in tree[v] if u not in seen)
        seen.update(kids)
        stack.extend(reversed(kids))
    return out


def tree_weight(tree: nx.Graph) -> Fraction:
    return sum((w for _, _, w in tree.edges(data='weight')), Fraction(0))


def tsp_double_tree(clients, dist: DistanceMatrix, depot: int) -> Tour:
    nodes = set(clients) | {depot}
    if len(nodes) == 1:
        return Tour.idle(depot)
    mst = minimum_spanning_tree(nodes, dist)
    return walk(preorder(mst, depot) + [depot], dist)


def best_tour(clients, dist: DistanceMatrix, depot: int, exact_limit: int) -> Tour:
    """Exact tour for small sets, double tree otherwise."""
    clients = set(clients) - {depot}
    if len(clients) <= min(exact_limit, Config.TSP_EXACT_MAX_CLIENTS):
        return tsp_exact(clients, dist, depot)
    return tsp_double_tree(clients, dist, depot)


def split_tour(tour: Tour, k: int, dist: DistanceMatrix) -> list:
    """Cut a depot tour into k contiguous segments, each closed at the depot.

    Cut j falls after the last stop whose walk prefix is at most
    j/k·(C − 2·dmax) + dmax, which bounds every segment by C/k + 2·dmax.
    """
    if k < 1:
        raise ValueError(f"split_tour needs k >= 1, got {k}")
    depot = tour.order[0]
    if k == 1:
        return [tour]

    positions = [i for i, v in enumerate(tour.order) if v != depot]
    stops = [tour.order[i] for i in positions]
    if not stops:
        return [Tour.idle(depot) for _ in range(k)]
    if k >= len(stops):
        singles = [walk((depot, v, depot), dist) for v in stops]
        return singles + [Tour.idle(depot) for _ in range(k - len(stops))]

    prefix, acc = {}, Fraction(0)
    for i in range(1, len(tour.order)):
        acc += dist(tour.order[i - 1], tour.order[i])
        prefix[i] = acc
    total = tour.cost
    dmax = max(dist(depot, v) for v in stops)

    segments, start = [], 0
    for j in range(1, k):
        threshold = Fraction(j, k) * (total - 2 * dmax) + dmax
        end = start
        while end < len(stops) and prefix[positions[end]] <= threshold:
            end += 1
        segments.append(stops[start:end])
        start = end
    segments.append(stops[start:])

    bound = total / k + 2 * dmax
    out = []
    for seg in segments:
        t = walk((depot, *seg, depot), dist) if seg else Tour.idle(depot)
        if t.cost > bound:
            raise InvariantViolation(f"split segment cost {t.cost} exceeds bound {bound}")
        out.append(t)
    return out
