"""
Instance generators: seeded random families, the reduction instances
(pinwheel star, pinwheel series-parallel, 3-partition star) and the
tightness families G_i / H_i.

Every generator is a pure function of its arguments; random families draw
from their own ``random.Random(seed)`` so output files are byte-identical
for the same (family, params, seed).
"""
import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction

from config import Config
from models import Edge, GeneratorError, Instance, Vertex
from services.instance_service import validate_instance

logger = logging.getLogger('rftt.generator')

RANDOM_FAMILIES = ('random_tree', 'random_star', 'random_line', 'random_general')
FAMILIES = RANDOM_FAMILIES + ('pinwheel_star', 'pinwheel_sp', 'partition_star', 'gi', 'hi')


@dataclass(frozen=True)
class GenSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0


def _build(name: str, turnovers: dict, edges) -> Instance:
    vertices = (Vertex(0), *(Vertex(v, turnovers[v]) for v in sorted(turnovers)))
    instance = Instance(name, 0, vertices,
                        tuple(Edge(min(u, v), max(u, v), Fraction(w)) for u, v, w in edges))
    validate_instance(instance)
    return instance


def _positive(params: dict, key: str, default=None) -> int:
    value = params.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise GeneratorError(f"parameter {key} must be a positive integer, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# Random families
# ---------------------------------------------------------------------------

def gen_random(spec: GenSpec) -> Instance:
    if spec.family not in RANDOM_FAMILIES:
        raise GeneratorError(f"Unsupported random family: {spec.family}")
    params = spec.params
    n = _positive(params, 'n')
    max_weight = _positive(params, 'max_weight', 10)
    max_turnover = _positive(params, 'max_turnover', 8)
    rng = random.Random(spec.seed)

    turnovers = {v: rng.randint(1, max_turnover) for v in range(1, n + 1)}
    if spec.family == 'random_star':
        edges = [(0, v, rng.randint(1, max_weight)) for v in range(1, n + 1)]
    elif spec.family == 'random_line':
        order = list(range(1, n + 1))
        order.insert(rng.randrange(n + 1), 0)
        edges = [(a, b, rng.randint(1, max_weight)) for a, b in zip(order, order[1:])]
    else:
        edges = [(rng.randrange(v), v, rng.randint(1, max_weight)) for v in range(1, n + 1)]
        if spec.family == 'random_general':
            extra = params.get('extra_edges', max(1, n // 2))
            if isinstance(extra, bool) or not isinstance(extra, int) or extra < 0:
                raise GeneratorError(f"parameter extra_edges must be a nonnegative integer, got {extra!r}")
            present = {(min(u, v), max(u, v)) for u, v, _ in edges}
            missing = [(u, v) for u in range(n + 1) for v in range(u + 1, n + 1)
                       if (u, v) not in present]
            for u, v in rng.sample(missing, min(extra, len(missing))):
                edges.append((u, v, rng.randint(1, max_weight)))

    name = f"{spec.family}-n{n}-s{spec.seed}"
    logger.debug("generated %s with %d edges", name, len(edges))
    return _build(name, turnovers, edges)


# ---------------------------------------------------------------------------
# Reduction instances
# ---------------------------------------------------------------------------

def _periods(periods) -> list:
    periods = list(periods)
    if not periods:
        raise GeneratorError("empty period list")
    for p in periods:
        if isinstance(p, bool) or not isinstance(p, int) or p < 1:
            raise GeneratorError(f"periods must be positive integers, got {p!r}")
    return periods


def gen_pinwheel(periods, shape: str = 'star') -> Instance:
    """Unit star with one leaf per job, or the series-parallel gadget.

    Series-parallel ids: depot 0, w¹ = 1, w = 2, w² = 3, then V¹ and V²
    (one copy of every job each). w¹, w and w² must be visited daily, so a
    cost-6 day walks depot → V¹ → w¹ → w → w² → V² → depot.
    """
    periods = _periods(periods)
    label = '-'.join(str(p) for p in periods)
    k = len(periods)
    if shape == 'star':
        turnovers = {j + 1: p for j, p in enumerate(periods)}
        return _build(f"pinwheel_star-{label}", turnovers,
                      [(0, v, 1) for v in turnovers])
    if shape in ('series_parallel', 'sp'):
        first, second = range(4, 4 + k), range(4 + k, 4 + 2 * k)
        turnovers = {1: 1, 2: 1, 3: 1}
        edges = [(1, 2, 1), (3, 2, 1)]
        for j, p in enumerate(periods):
            turnovers[first[j]] = p
            turnovers[second[j]] = p
            edges += [(0, first[j], 1), (0, second[j], 1), (1, first[j], 1), (3, second[j], 1)]
        return _build(f"pinwheel_sp-{label}", turnovers, edges)
    raise GeneratorError(f"Unsupported pinwheel shape: {shape}. Use star or series_parallel")


def gen_partition_star(integers, m: int) -> Instance:
    """Star with leaf weights a_i and turnover m everywhere; target value 2B."""
    integers = list(integers)
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise GeneratorError(f"m must be a positive integer, got {m!r}")
    if len(integers) != 3 * m:
        raise GeneratorError(f"partition_star needs 3m = {3 * m} integers, got {len(integers)}")
    if any(isinstance(a, bool) or not isinstance(a, int) or a < 1 for a in integers):
        raise GeneratorError(f"partition_star integers must be positive, got {integers}")
    total = sum(integers)
    if total % m:
        raise GeneratorError(f"sum {total} is not divisible by m = {m}")
    bound = total // m
    for a in integers:
        if not Fraction(bound, 4) < a < Fraction(bound, 2):
            raise GeneratorError(f"integer {a} violates B/4 < a < B/2 for B = {bound}")
    turnovers = {j + 1: m for j in range(len(integers))}
    edges = [(0, j + 1, a) for j, a in enumerate(integers)]
    return _build(f"partition_star-m{m}-B{bound}", turnovers, edges)


# ---------------------------------------------------------------------------
# Tightness families
# ---------------------------------------------------------------------------

def gi_sequence(i: int) -> list:
    """a^i: a^0 = (1); a^{i+1} interleaves a^i with 2^i + 1 .. 2^{i+1}."""
    seq = [1]
    for level in range(i):
        fresh = range((1 << level) + 1, (1 << (level + 1)) + 1)
        seq = [x for pair in zip(seq, fresh) for x in pair]
    return seq


def gi_turnovers(i: int) -> list:
    return [1 << (a - 1) for a in gi_sequence(i)]


def gen_gi(i: int) -> Instance:
    """Unit path v_1..v_{2^i} with turnover 2^{a_j - 1}; the depot hangs off
    v_1 by a zero-weight edge."""
    if isinstance(i, bool) or not isinstance(i, int) or not 0 <= i <= Config.GI_MAX:
        raise GeneratorError(f"gi index must be in 0..{Config.GI_MAX}, got {i!r}")
    taus = gi_turnovers(i)
    turnovers = {j + 1: t for j, t in enumerate(taus)}
    edges = [(0, 1, 0)] + [(j, j + 1, 1) for j in range(1, len(taus))]
    return _build(f"gi-{i}", turnovers, edges)


def hi_layers(i: int) -> list:
    """(first id, size) per layer; the size-1 first layer is the depot."""
    layers, next_id = [], 0
    for size in gi_turnovers(i):
        layers.append((next_id, size))
        next_id += size
    return layers


def gen_hi(i: int) -> Instance:
    """Layer j holds τ_j copies of G_i's j-th vertex; copy r of a layer links
    to the copies of the next layer congruent to r modulo the smaller size."""
    if isinstance(i, bool) or not isinstance(i, int) or not 1 <= i <= Config.HI_MAX:
        raise GeneratorError(f"hi index must be in 1..{Config.HI_MAX}, got {i!r}")
    layers = hi_layers(i)
    turnovers = {}
    for start, size in layers[1:]:
        for r in range(size):
            turnovers[start + r] = size
    edges = []
    for (a, p), (b, q) in zip(layers, layers[1:]):
        step = min(p, q)
        for r in range(p):
            for s in range(q):
                if r % step == s % step:
                    edges.append((a + r, b + s, 1))
    return _build(f"hi-{i}", turnovers, edges)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

def generate(spec: GenSpec) -> Instance:
    params = spec.params
    if spec.family in RANDOM_FAMILIES:
        return gen_random(spec)
    if spec.family == 'pinwheel_star':
        return gen_pinwheel(params.get('periods', ()), 'star')
    if spec.family == 'pinwheel_sp':
        return gen_pinwheel(params.get('periods', ()), 'series_parallel')
    if spec.family == 'partition_star':
        return gen_partition_star(params.get('ints', ()), params.get('m'))
    if spec.family == 'gi':
        return gen_gi(params.get('i'))
    if spec.family == 'hi':
        return gen_hi(params.get('i'))
    raise GeneratorError(f"Unsupported family: {spec.family}. Use one of {', '.join(FAMILIES)}")
