"""
Unit tests for routing_service: Held-Karp, double tree, MST preorder and
tour splitting.
"""
import random
from fractions import Fraction
from itertools import combinations
from unittest.mock import patch

import pytest

from models import SizeGuardError
from services.instance_service import metric_closure
from services.routing_service import (
    SubsetTours, best_tour, minimum_spanning_tree, preorder, split_tour,
    tree_weight, tsp_double_tree, tsp_exact, walk,
)
from tests.helpers.instance_helpers import make_instance, make_star


@pytest.fixture
def square():
    """4-cycle 0-1-2-3-0 with unit edges."""
    return make_instance({1: 1, 2: 1, 3: 1}, [(0, 1, 1), (1, 2, 1), (2, 3, 1), (0, 3, 1)])


class TestTspExact:

    def test_cycle_optimum(self, square):
        dist = metric_closure(square)
        tour = tsp_exact([1, 2, 3], dist, 0)
        assert tour.cost == 4
        assert tour.order[0] == tour.order[-1] == 0
        assert sorted(tour.stops) == [1, 2, 3]

    def test_empty_set_is_idle(self, square):
        tour = tsp_exact([], metric_closure(square), 0)
        assert tour.order == (0, 0)
        assert tour.cost == 0

    def test_subset_table_matches_walks(self, square):
        dist = metric_closure(square)
        table = SubsetTours((1, 2, 3), dist, 0)
        for mask in range(1, 8):
            order = table.order(mask)
            assert sorted(order) == list(table.members(mask))
            assert walk((0, *order, 0), dist).cost == table.cost(mask)
        assert table.cost(table.mask_of([2])) == 4
        assert table.cost(table.mask_of([1, 3])) == 4

    def test_fractional_weights(self):
        inst = make_star([Fraction(1, 3), Fraction(1, 2)], [1, 1])
        tour = tsp_exact([1, 2], metric_closure(inst), 0)
        assert tour.cost == Fraction(5, 3)

    def test_size_guard(self, square):
        with patch('services.routing_service.Config.TSP_EXACT_MAX_CLIENTS', 2):
            with pytest.raises(SizeGuardError, match="exceeds guard"):
                tsp_exact([1, 2, 3], metric_closure(square), 0)


class TestDoubleTree:

    def test_within_twice_optimum(self, square):
        dist = metric_closure(square)
        approx = tsp_double_tree([1, 2, 3], dist, 0)
        assert sorted(approx.stops) == [1, 2, 3]
        assert approx.cost <= 2 * tsp_exact([1, 2, 3], dist, 0).cost

    def test_preorder_smallest_first(self):
        inst = make_star([1, 1, 1], [1, 1, 1])
        mst = minimum_spanning_tree([0, 1, 2, 3], metric_closure(inst))
        assert tree_weight(mst) == 3
        assert preorder(mst, 0) == [0, 1, 2, 3]

    def test_best_tour_switches_on_limit(self, square):
        dist = metric_closure(square)
        assert best_tour([1, 2, 3], dist, 0, exact_limit=5).cost == 4
        fallback = best_tour([1, 2, 3], dist, 0, exact_limit=0)
        assert fallback == tsp_double_tree([1, 2, 3], dist, 0)


class TestSplitTour:
    """Segments stay within C/k + 2·dmax."""

    def test_two_way_split(self):
        inst = make_star([1, 1, 1, 1], [1, 1, 1, 1])
        dist = metric_closure(inst)
        tour = walk((0, 1, 2, 3, 4, 0), dist)
        assert tour.cost == 8
        parts = split_tour(tour, 2, dist)
        assert [p.stops for p in parts] == [(1, 2), (3, 4)]
        assert all(p.cost <= 6 for p in parts)

    def test_more_parts_than_stops(self):
        inst = make_star([1, 2], [1, 1])
        dist = metric_closure(inst)
        parts = split_tour(walk((0, 1, 2, 0), dist), 3, dist)
        assert [p.stops for p in parts] == [(1,), (2,), ()]
        assert [p.cost for p in parts] == [2, 4, 0]

    def test_k_one_returns_tour(self):
        inst = make_star([1], [1])
        dist = metric_closure(inst)
        tour = walk((0, 1, 0), dist)
        assert split_tour(tour, 1, dist) == [tour]

    def test_rejects_zero_parts(self):
        inst = make_star([1], [1])
        dist = metric_closure(inst)
        with pytest.raises(ValueError, match="k >= 1"):
            split_tour(walk((0, 1, 0), dist), 0, dist)

    def test_covers_every_stop_once(self):
        inst = make_star([1, 2, 3, 4, 5, 6], [1] * 6)
        dist = metric_closure(inst)
        tour = walk((0, 1, 2, 3, 4, 5, 6, 0), dist)
        parts = split_tour(tour, 4, dist)
        assert sorted(v for p in parts for v in p.stops) == [1, 2, 3, 4, 5, 6]
        assert all(p.cost <= tour.cost / 4 + 12 for p in parts)


# ===================================================================
# Random point sets
# ===================================================================

def _points(seed, n=7):
    """Complete graph on random grid points with Manhattan edge weights; depot 0."""
    rng = random.Random(seed)
    pts = [(rng.randint(0, 20), rng.randint(0, 20)) for _ in range(n + 1)]
    edges = [(u, v, abs(pts[u][0] - pts[v][0]) + abs(pts[u][1] - pts[v][1]))
             for u, v in combinations(range(n + 1), 2)]
    return make_instance({j: 1 for j in range(1, n + 1)}, edges, f"points-{seed}")


class TestRandomPointSets:

    @pytest.mark.parametrize("seed", range(10))
    def test_double_tree_within_twice_exact(self, seed):
        inst = _points(seed)
        dist = metric_closure(inst)
        exact = tsp_exact(inst.clients, dist, 0)
        approx = tsp_double_tree(inst.clients, dist, 0)
        assert sorted(approx.stops) == list(inst.clients)
        assert exact.cost <= approx.cost <= 2 * exact.cost

    @pytest.mark.parametrize("seed", range(10))
    def test_split_segments_within_bound(self, seed):
        inst = _points(seed)
        dist = metric_closure(inst)
        tour = tsp_double_tree(inst.clients, dist, 0)
        dmax = max(dist(0, j) for j in inst.clients)
        for k in range(1, 6):
            parts = split_tour(tour, k, dist)
            assert len(parts) == k
            assert [v for p in parts for v in p.stops] == list(tour.stops)
            assert all(p.cost <= tour.cost / k + 2 * dmax for p in parts)
