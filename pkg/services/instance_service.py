"""
Instance file I/O, structural validation, topology classification,
dominance pruning (normalize) and metric closure.
"""
import json
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import networkx as nx

from models import (
    DistanceMatrix, Edge, Instance, InstanceError, PruneEvent, Topology,
    TopologyError, Vertex, as_rational, rational_json,
)

logger = logging.getLogger('rftt.instance')


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

def parse_instance(doc: dict) -> Instance:
    """Build an Instance from the JSON document form and validate it."""
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be a JSON object", doc)
    missing = [k for k in ('name', 'depot', 'vertices', 'edges') if k not in doc]
    if missing:
        raise InstanceError(f"instance document missing keys: {', '.join(missing)}", missing)

    depot = doc['depot']
    vertices = []
    for entry in doc['vertices']:
        if not isinstance(entry, dict) or 'id' not in entry:
            raise InstanceError(f"malformed vertex entry {entry!r}", entry)
        vid = entry['id']
        if 'turnover' not in entry:
            if vid != depot:
                raise InstanceError(f"duplicate depot: vertex {vid} has no turnover", vid)
            vertices.append(Vertex(vid))
        else:
            vertices.append(Vertex(vid, entry['turnover']))

    edges = []
    for entry in doc['edges']:
        if not isinstance(entry, dict) or not {'u', 'v', 'weight'} <= set(entry):
            raise InstanceError(f"malformed edge entry {entry!r}", entry)
        edges.append(Edge(entry['u'], entry['v'], as_rational(entry['weight'])))

    instance = Instance(str(doc['name']), depot, tuple(vertices), tuple(edges))
    validate_instance(instance)
    return instance


def load_instance(path: str) -> Instance:
    try:
        with open(path, encoding='utf-8') as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise InstanceError(f"instance file {path} is not valid JSON: {e}", path)
    return parse_instance(doc)


def instance_document(instance: Instance) -> dict:
    vertices = []
    for v in sorted(instance.vertices, key=lambda v: v.id):
        entry = {"id": v.id}
        if not v.is_depot:
            entry["turnover"] = v.turnover
        vertices.append(entry)
    edges = [{"u": e.u, "v": e.v, "weight": rational_json(e.weight)}
             for e in sorted(instance.edges, key=lambda e: e.key)]
    return {"name": instance.name, "depot": instance.depot,
            "vertices": vertices, "edges": edges}


def dump_instance(instance: Instance) -> str:
    return json.dumps(instance_document(instance), indent=2) + "\n"


def save_instance(instance: Instance, path: str):
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        fh.write(dump_instance(instance))


# ---------------------------------------------------------------------------
# Validation and graph views
# ---------------------------------------------------------------------------

def validate_instance(instance: Instance):
    ids = [v.id for v in instance.vertices]
    for vid in ids:
        if not isinstance(vid, int) or isinstance(vid, bool):
            raise InstanceError(f"vertex id must be an integer, got {vid!r}", vid)
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise InstanceError(f"duplicate vertex id {dup}", dup)
    if instance.depot not in instance.by_id:
        raise InstanceError(f"depot {instance.depot} is not a vertex", instance.depot)

    for v in instance.vertices:
        if v.id == instance.depot:
            if v.turnover is not None:
                raise InstanceError(f"depot {v.id} must not have a turnover", v.id)
            continue
        if v.turnover is None:
            raise InstanceError(f"duplicate depot: vertex {v.id} has no turnover", v.id)
        if isinstance(v.turnover, bool) or not isinstance(v.turnover, int):
            raise InstanceError(f"non-integer turnover {v.turnover!r} at vertex {v.id}", v.id)
        if v.turnover <= 0:
            raise InstanceError(f"nonpositive turnover {v.turnover} at vertex {v.id}", v.id)

    seen = set()
    for e in instance.edges:
        for end in (e.u, e.v):
            if end not in instance.by_id:
                raise InstanceError(f"edge ({e.u},{e.v}) references unknown vertex {end}", e)
        if e.u == e.v:
            raise InstanceError(f"self-loop at vertex {e.u}", e)
        if e.key in seen:
            raise InstanceError(f"parallel edge between {e.u} and {e.v}", e)
        if e.weight < 0:
            raise InstanceError(f"negative weight {e.weight} on edge ({e.u},{e.v})", e)
        seen.add(e.key)

    if not nx.is_connected(to_graph(instance)):
        raise InstanceError("disconnected graph", instance.name)


def to_graph(instance: Instance) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(sorted(v.id for v in instance.vertices))
    for e in sorted(instance.edges, key=lambda e: e.key):
        g.add_edge(e.u, e.v, weight=e.weight)
    return g


def classify(instance: Instance) -> Topology:
    """Structural tag; precedence halfline > line > star > tree > general."""
    g = to_graph(instance)
    if not nx.is_tree(g):
        return Topology.GENERAL
    degrees = dict(g.degree)
    if max(degrees.values(), default=0) <= 2:
        if degrees[instance.depot] <= 1:
            return Topology.HALFLINE
        return Topology.LINE
    if all(g.has_edge(instance.depot, j) for j in instance.clients):
        return Topology.STAR
    return Topology.TREE


# ---------------------------------------------------------------------------
# Rooted trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootedTree:
    root: int
    parent: dict
    children: dict
    weight: dict   # weight of the edge (parent[v], v), keyed by v
    depth: dict    # distance from the root
    order: tuple   # preorder, smallest child first

    def edges(self):
        """(parent, child) pairs in preorder."""
        return [(self.parent[v], v) for v in self.order if v != self.root]

    def root_path(self, v: int) -> list:
        """Edges from v up to the root, each as (parent, child)."""
        path = []
        while v != self.root:
            path.append((self.parent[v], v))
            v = self.parent[v]
        return path

    def subtree(self, v: int) -> list:
        out, stack = [], [v]
        while stack:
            x = stack.pop()
            out.append(x)
            stack.extend(reversed(self.children[x]))
        return out


def root_tree(instance: Instance) -> RootedTree:
    g = to_graph(instance)
    if not nx.is_tree(g):
        raise TopologyError(f"instance {instance.name} is not a tree", instance.name)
    root = instance.depot
    parent, children, weight, depth = {root: None}, {}, {root: Fraction(0)}, {root: Fraction(0)}
    order = []
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        kids = sorted(u for u in g[v] if u != parent[v])
        children[v] = tuple(kids)
        for u in kids:
            parent[u] = v
            weight[u] = g[v][u]['weight']
            depth[u] = depth[v] + weight[u]
        stack.extend(reversed(kids))
    return RootedTree(root, parent, children, weight, depth, tuple(order))


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def normalize(instance: Instance):
    """Validate, classify and apply dominance pruning.

    Returns (instance, topology, prune events). On trees a client whose
    turnover is not below the smallest turnover strictly beneath it is
    visited whenever that descendant is, so its effective turnover drops to
    that minimum; the original turnover stays on the vertex for verification.
    """
    validate_instance(instance)
    topology = classify(instance)
    if not topology.is_tree:
        return instance, topology, []

    tree = root_tree(instance)
    below: dict = {}     # v -> (min tau strictly below v, witness)
    subtree_min: dict = {}
    for v in reversed(tree.order):
        best = None
        for c in tree.children[v]:
            if best is None or subtree_min[c] < best:
                best = subtree_min[c]
        below[v] = best
        own = None if v == instance.depot else (instance.tau(v), v)
        candidates = [x for x in (own, best) if x is not None]
        subtree_min[v] = min(candidates) if candidates else None

    effective, events = {}, []
    for v in tree.order:
        if v == instance.depot or below[v] is None:
            continue
        tau_below, witness = below[v]
        if tau_below <= instance.tau(v):
            events.append(PruneEvent(v, instance.turnover(v), tau_below, witness))
            if tau_below < instance.tau(v):
                effective[v] = tau_below

    if effective:
        logger.debug("normalize %s: lowered %d turnovers", instance.name, len(effective))
    return instance.with_effective(effective), topology, events


# ---------------------------------------------------------------------------
# Metric closure
# ---------------------------------------------------------------------------

def metric_closure(instance: Instance) -> DistanceMatrix:
    """All-pairs shortest paths; cached on the graph, so turnover changes and renames reuse it."""
    dist = _closure(tuple(sorted(v.id for v in instance.vertices)), instance.edges)
    if dist is None:
        raise InstanceError("disconnected graph", instance.name)
    return dist


@lru_cache(maxsize=128)
def _closure(ids: tuple, edges: tuple) -> DistanceMatrix | None:
    g = nx.Graph()
    g.add_nodes_from(ids)
    for e in sorted(edges, key=lambda e: e.key):
        g.add_edge(e.u, e.v, weight=e.weight)
    if not nx.is_connected(g):
        return None
    lengths = dict(nx.all_pairs_dijkstra_path_length(g, weight='weight'))
    rows = {u: {v: Fraction(lengths[u][v]) for v in ids} for u in ids}
    return DistanceMatrix(ids, rows)


def max_depot_distance(instance: Instance, dist: DistanceMatrix | None = None) -> Fraction:
    dist = dist or metric_closure(instance)
    return max((dist(instance.depot, j) for j in instance.clients), default=Fraction(0))
