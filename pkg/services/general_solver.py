"""
General-metric approximations: power-of-two rounding, per-class solving,
the saturated/unsaturated O(log n) MIN-MAX algorithm, the synchronized
MIN-AVG greedy, and the spanning-tree baseline.
"""
import logging
import time
from dataclasses import dataclass
from fractions import Fraction

from config import Config
from models import (
    Edge, Instance, InstanceError, InvariantViolation, Objective, Schedule, Vertex,
)
from services.instance_service import max_depot_distance, metric_closure, normalize
from services.routing_service import best_tour, minimum_spanning_tree, split_tour, tsp_double_tree
from services.schedule_service import make_report

logger = logging.getLogger('rftt.general')


def is_power_of_two(x: int) -> bool:
    return x >= 1 and x & (x - 1) == 0


def floor_pow2(x: int) -> int:
    return 1 << (x.bit_length() - 1)


def ceil_log2(n: int) -> int:
    return (n - 1).bit_length() if n > 1 else 0


def two_adic(day: int) -> int:
    """Exponent of the largest power of two dividing ``day``."""
    return (day & -day).bit_length() - 1


def round_pow2(instance: Instance) -> Instance:
    """Round every effective turnover down to a power of two."""
    lowered = {}
    for j in instance.clients:
        tau = instance.tau(j)
        if not is_power_of_two(tau):
            lowered[j] = floor_pow2(tau)
    return instance.with_effective(lowered)


@dataclass(frozen=True)
class ClassPartition:
    classes: dict    # 2^i -> frozenset of clients
    saturated: dict  # 2^i -> bool

    @property
    def saturated_clients(self) -> set:
        return {j for m, members in self.classes.items() if self.saturated[m] for j in members}


def classify_classes(instance: Instance) -> ClassPartition:
    """Group clients by (already rounded) turnover; class k is saturated iff it has ≥ k clients."""
    groups: dict = {}
    for j in instance.clients:
        groups.setdefault(instance.tau(j), set()).add(j)
    classes = {m: frozenset(members) for m, members in sorted(groups.items())}
    return ClassPartition(classes, {m: len(members) >= m for m, members in classes.items()})


def general_lower_bound(instance: Instance, objective: str) -> Fraction:
    """Valid lower bound on any feasible schedule's cost.

    Trees use L(G,τ); other metrics use max_j 2·d(s,j)/τ_j. MIN-MAX also
    takes the farthest round trip.
    """
    norm, topology, _ = normalize(instance)
    dist = metric_closure(instance)
    if topology.is_tree:
        from services.tree_solver import tree_lower_bound, tt_weights
        bound = tree_lower_bound(tt_weights(norm))
    else:
        bound = max((2 * dist(instance.depot, j) / instance.turnover(j)
                     for j in instance.clients), default=Fraction(0))
    if objective == Objective.MIN_MAX.value:
        bound = max(bound, 2 * max_depot_distance(instance, dist))
    return bound


def _concat(parts, depot: int) -> tuple:
    """Join closed tours (given by their stops) into one day's visit order."""
    out = []
    for stops in parts:
        if not stops:
            continue
        if out:
            out.append(depot)
        out.extend(stops)
    return tuple(out)


def _class_days(rounded: Instance, clients, objective: str, dist) -> tuple:
    """Per-class plan over ``clients``: returns (period, per-day stop lists, class count)."""
    groups: dict = {}
    for j in clients:
        groups.setdefault(rounded.tau(j), []).append(j)
    depot = rounded.depot
    plans = []
    for m in sorted(groups):
        base = best_tour(groups[m], dist, depot, Config.PER_CLASS_EXACT_MAX_CLIENTS)
        if objective == Objective.MIN_AVG.value:
            plans.append((m, None, base))
        else:
            plans.append((m, split_tour(base, m, dist), base))
    period = max(groups, default=1)

    days = []
    for day in range(1, period + 1):
        parts = []
        for m, segments, base in plans:
            if segments is None:
                if day % m == 0:
                    parts.append(base.stops)
            else:
                parts.append(segments[(day - 1) % m].stops)
        days.append(_concat(parts, depot))
    return period, days, len(groups)


def solve_per_class(instance: Instance, objective: str):
    started = time.perf_counter()
    norm, topology, _ = normalize(instance)
    rounded = round_pow2(norm)
    dist = metric_closure(instance)

    period, days, class_count = _class_days(rounded, rounded.clients, objective, dist)
    tau_max = max((instance.turnover(j) for j in instance.clients), default=1)
    limit = tau_max.bit_length()
    if class_count > limit:
        raise InvariantViolation(f"{class_count} classes exceed ⌊log₂ τmax⌋ + 1 = {limit}")

    schedule = Schedule(period, tuple(days))
    return schedule, make_report(
        instance, schedule, 'classes', objective, general_lower_bound(instance, objective), started,
        {"topology": topology.value, "classes": class_count},
    )


def pack_unsaturated(rounded: Instance, unsaturated, n: int) -> dict:
    """Pack unsaturated clients into W_2, W_4, …, W_{2^K}, K = max(1, ⌈log₂ n⌉).

    Clients with turnover i ≤ 2^K go to W_i; larger turnovers fill the
    lowest-index set with space. Class 1 is always saturated, so W_1 is
    never needed.
    """
    top = max(1, ceil_log2(n))
    sets = {1 << e: [] for e in range(1, top + 1)}
    overflow = []
    for j in sorted(unsaturated, key=lambda j: (rounded.tau(j), j)):
        tau = rounded.tau(j)
        if tau in sets:
            sets[tau].append(j)
        else:
            overflow.append(j)
    for j in overflow:
        slot = next((i for i in sorted(sets) if len(sets[i]) < i), None)
        if slot is None:
            raise InvariantViolation(f"no W set has space for client {j}")
        sets[slot].append(j)

    for i, members in sets.items():
        if len(members) > i:
            raise InvariantViolation(f"|W_{i}| = {len(members)} exceeds {i}")
        for j in members:
            if rounded.tau(j) < i:
                raise InvariantViolation(f"client {j} with turnover {rounded.tau(j)} placed in W_{i}")
    return sets


def solve_minmax_logn(instance: Instance):
    started = time.perf_counter()
    norm, topology, _ = normalize(instance)
    rounded = round_pow2(norm)
    dist = metric_closure(instance)
    depot = rounded.depot
    n = len(rounded.clients)

    partition = classify_classes(rounded)
    saturated = partition.saturated_clients
    unsaturated = [j for j in rounded.clients if j not in saturated]
    sets = pack_unsaturated(rounded, unsaturated, n)
    per_day_cap = max(1, ceil_log2(n))

    base_period, base_days, class_count = _class_days(
        rounded, sorted(saturated), Objective.MIN_MAX.value, dist)
    used = [i for i, members in sets.items() if members]
    period = max([base_period, *used])

    days, worst = [], 0
    for day in range(1, period + 1):
        parts = [base_days[(day - 1) % base_period]]
        singles = []
        for i in sorted(sets):
            members = sets[i]
            r = day % i
            if r < len(members):
                singles.append(members[r])
        worst = max(worst, len(singles))
        parts.extend((j,) for j in singles)
        days.append(_concat(parts, depot))
    if worst > per_day_cap:
        raise InvariantViolation(f"{worst} unsaturated visits on one day exceed {per_day_cap}")

    schedule = Schedule(period, tuple(days))
    return schedule, make_report(
        instance, schedule, 'logn-minmax', Objective.MIN_MAX.value,
        general_lower_bound(instance, Objective.MIN_MAX.value), started, {
            "topology": topology.value,
            "saturated": len(saturated),
            "unsaturated": len(unsaturated),
            "w_sets": {str(i): list(m) for i, m in sets.items() if m},
            "max_unsaturated_per_day": worst,
            "classes": class_count,
        })


def synchronized_tours(rounded: Instance, dist) -> tuple:
    """Nested double-tree tours T_0 ⊆ T_1 ⊆ … of the synchronized schedule.

    Returns (period, tours) where tours[j] serves every client with
    turnover ≤ 2^j.
    """
    period = max((rounded.tau(j) for j in rounded.clients), default=1)
    tours = []
    for level in range(period.bit_length()):
        members = [j for j in rounded.clients if rounded.tau(j) <= 1 << level]
        tours.append(tsp_double_tree(members, dist, rounded.depot))
    return period, tours


def solve_minavg_sync(instance: Instance):
    started = time.perf_counter()
    norm, topology, _ = normalize(instance)
    rounded = round_pow2(norm)
    dist = metric_closure(instance)
    period, tours = synchronized_tours(rounded, dist)
    top = len(tours) - 1

    days = tuple(tours[min(two_adic(day), top)].stops for day in range(1, period + 1))
    schedule = Schedule(period, days)

    # frequency-weighted cost of the distinct tours
    weighted = sum((tours[level].cost * (period >> (level + 1)) for level in range(top)), Fraction(0))
    weighted += tours[top].cost
    expected = weighted / period

    report = make_report(instance, schedule, 'sync', Objective.MIN_AVG.value,
                         general_lower_bound(instance, Objective.MIN_AVG.value), started, {
                             "topology": topology.value,
                             "distinct_tours": len(tours),
                         })
    if report.avg != expected:
        raise InvariantViolation(f"sync avg {report.avg} differs from tour-frequency total {expected}")
    return schedule, report


def spanning_tree_instance(instance: Instance) -> Instance:
    """The instance restricted to an MST of its metric closure."""
    dist = metric_closure(instance)
    mst = minimum_spanning_tree([v.id for v in instance.vertices], dist)
    edges = tuple(Edge(min(u, v), max(u, v), Fraction(w))
                  for u, v, w in sorted(mst.edges(data='weight')))
    vertices = tuple(Vertex(v.id, v.turnover) for v in instance.vertices)
    return Instance(f"{instance.name}-mst", instance.depot, vertices, edges)


def solve_spanning_tree(instance: Instance, objective: str):
    """Tree algorithm run on the closure's MST, tours evaluated on the real metric."""
    from services.tree_solver import solve_minavg_tree, solve_minmax_tree

    started = time.perf_counter()
    tree_instance = spanning_tree_instance(instance)
    if objective == Objective.MIN_AVG.value:
        schedule, tree_report = solve_minavg_tree(tree_instance)
    else:
        schedule, tree_report = solve_minmax_tree(tree_instance)
    return schedule, make_report(
        instance, schedule, 'mst-tree', objective, general_lower_bound(instance, objective), started,
        {"tree_cost": str(tree_report.cost), "tree_algorithm": tree_report.algorithm},
    )


def rotating_schedule(instance: Instance) -> Schedule:
    """Day-d rotating path schedule of a layered H_i instance.

    Copies of a layer share one turnover p and carry consecutive ids; day d
    visits copy d mod p of every layer, in id order.
    """
    layers: dict = {}
    for j in instance.clients:
        layers.setdefault(instance.turnover(j), []).append(j)
    for p, copies in layers.items():
        if len(copies) != p:
            raise InstanceError(f"layer with turnover {p} has {len(copies)} copies", p)
    period = max(layers, default=1)
    days = tuple(
        tuple(sorted(copies[day % p] for p, copies in layers.items()))
        for day in range(1, period + 1)
    )
    return Schedule(period, days)
