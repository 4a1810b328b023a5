"""
Tests for the tree solvers: tt-weights, L(G,τ), tree2 and tree6.
"""
from fractions import Fraction

import pytest

from models import InstanceError, InvariantViolation, TopologyError
from services.general_solver import round_pow2
from services.generator_service import GenSpec, generate
from services.instance_service import normalize, root_tree
from services.schedule_service import verify
from services.tree_solver import (
    assemble_day_tour, day_edges, euler_sequence, minmax_lower_bound, recurse_tree_schedule,
    solve_minavg_tree, solve_minmax_tree, steiner_preorder, synchronized_classes, tree_lower_bound, tt_weights,
)
from tests.helpers.instance_helpers import make_instance, make_path, make_star, make_tree


@pytest.fixture
def small_tree():
    """0 -(1)- 1 -(2)- 2, 1 -(1)- 3, 0 -(3)- 4."""
    return make_tree({1: 0, 2: 1, 3: 1, 4: 0}, {1: 1, 2: 2, 3: 1, 4: 3},
                     {1: 2, 2: 4, 3: 8, 4: 1})


# ===================================================================
# Lower bound
# ===================================================================

class TestTreeLowerBound:

    def test_tt_weights_take_subtree_minimum(self, small_tree):
        tt = tt_weights(small_tree)
        assert tt.q[(0, 1)] == 2
        assert tt.q[(1, 2)] == 4
        assert tt.q[(1, 3)] == 8
        assert tt.q[(0, 4)] == 1

    def test_bound_value(self, small_tree):
        # 2 · (1/2 + 2/4 + 1/8 + 3/1)
        assert tree_lower_bound(tt_weights(small_tree)) == Fraction(33, 4)

    def test_minmax_bound_includes_round_trip(self, halfline):
        assert tree_lower_bound(tt_weights(halfline)) == Fraction(7, 2)
        assert minmax_lower_bound(halfline) == 6


class TestTreeWalks:

    def test_euler_sequence_on_star(self, unit_star):
        seq = euler_sequence(root_tree(unit_star))
        assert seq == [(0, 1), (1, 0), (0, 2), (2, 0), (0, 3), (3, 0)]

    def test_steiner_preorder(self, small_tree):
        tree = root_tree(small_tree)
        assert steiner_preorder(tree, [4, 2]) == [2, 4]
        assert steiner_preorder(tree, [3, 1, 2]) == [1, 2, 3]


# ===================================================================
# tree2: MIN-AVG
# ===================================================================

class TestMinAvgTree:
    """Synchronized schedule on rounded turnovers."""

    def test_power_of_two_attains_bound(self, unit_star):
        schedule, report = solve_minavg_tree(unit_star)
        assert report.feasible is True
        assert schedule.period == 4
        assert schedule.visits(1) == ()
        assert schedule.visits(4) == (1, 2, 3)
        assert report.avg == report.lower_bound == 2

    def test_halfline_attains_bound(self, halfline):
        _, report = solve_minavg_tree(halfline)
        assert report.avg == Fraction(7, 2)

    def test_rounding_stays_within_twice_bound(self):
        inst = make_star([1], [3])
        schedule, report = solve_minavg_tree(inst)
        assert schedule.period == 2
        assert report.avg == 1
        assert report.lower_bound == Fraction(2, 3)
        assert verify(inst, schedule).feasible

    def test_pruned_vertex_reported(self):
        inst = make_tree({1: 0, 2: 1}, {1: 1, 2: 1}, {1: 8, 2: 2})
        schedule, report = solve_minavg_tree(inst)
        assert report.diagnostics["pruned"] == 1
        assert schedule.visits(2) == (1, 2)

    def test_classes_by_turnover(self, unit_star):
        compact = synchronized_classes(unit_star)
        assert [(c.residue, c.modulus, sorted(c.vertices)) for c in compact.classes] == [
            (0, 2, [1]), (0, 4, [2, 3])]

    def test_rejects_general(self):
        inst = make_instance({1: 2, 2: 2}, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
        with pytest.raises(TopologyError):
            solve_minavg_tree(inst)

    @pytest.mark.parametrize("seed", range(8))
    def test_random_trees_feasible(self, seed):
        inst = generate(GenSpec('random_tree', {"n": 9, "max_weight": 7, "max_turnover": 12}, seed))
        schedule, report = solve_minavg_tree(inst)
        assert report.feasible is True
        assert report.avg <= 2 * report.lower_bound


# ===================================================================
# tree6: MIN-MAX
# ===================================================================

class TestMinMaxTree:
    """Congruence-class recursion and per-day tours."""

    def test_recursion_on_star(self, unit_star):
        assignment = recurse_tree_schedule(unit_star)
        assert assignment.g[(0, 2)] == frozenset({1})
        assert assignment.g[(1, 4)] == frozenset({2})
        assert assignment.g[(3, 4)] == frozenset({3})
        assert assignment.call_count <= 6
        assert assignment.split_clients == 0

    def test_chain_trace(self):
        """s - u - v with unit edges, τ = (1, 2): split after (su, uv), d² = (us)."""
        assignment = recurse_tree_schedule(make_path([1, 1], [1, 2]))
        assert assignment.f[(0, 1)] == frozenset({(0, 1)})
        assert assignment.g[(0, 1)] == frozenset({1})
        assert assignment.f[(0, 2)] == frozenset({(1, 2)})
        assert assignment.g[(0, 2)] == frozenset({2})
        assert assignment.g[(1, 2)] == frozenset()
        assert assignment.call_count == 3

    def test_chain_day_tours(self):
        inst = make_path([1, 1], [1, 2])
        assignment = recurse_tree_schedule(inst)
        tt = tt_weights(inst)
        even, odd = assemble_day_tour(assignment, tt, 2), assemble_day_tour(assignment, tt, 1)
        assert even.order == (0, 1, 2, 0) and even.cost == 4
        assert odd.order == (0, 1, 0) and odd.cost == 2

    def test_chain_schedule_meets_bound(self):
        schedule, report = solve_minmax_tree(make_path([1, 1], [1, 2]))
        assert schedule.period == 2
        assert report.max == report.lower_bound == 4

    def test_day_tours_follow_classes(self, unit_star):
        assignment = recurse_tree_schedule(unit_star)
        tt = tt_weights(unit_star)
        stops = [assemble_day_tour(assignment, tt, day).stops for day in range(1, 5)]
        assert stops == [(2,), (1,), (3,), (1,)]
        assert assemble_day_tour(assignment, tt, 1).cost == 2

    def test_idle_day(self):
        inst = make_path([1, 1], [4, 4])
        tour = assemble_day_tour(recurse_tree_schedule(inst), tt_weights(inst), 1)
        assert tour.order == (0, 0) and tour.cost == 0

    def test_star_schedule(self, unit_star):
        schedule, report = solve_minmax_tree(unit_star)
        assert report.feasible is True
        assert schedule.period == 4
        assert report.max == 2

    def test_recursion_needs_power_of_two(self):
        with pytest.raises(InstanceError, match="non-power-of-two"):
            recurse_tree_schedule(make_star([1], [3]))

    def test_single_client(self):
        schedule, report = solve_minmax_tree(make_star([5], [1]))
        assert schedule.period == 1
        assert report.max == 10

    def test_broken_day_tree_raises(self, unit_star):
        assignment = recurse_tree_schedule(unit_star)
        assignment.f[(1, 4)] = frozenset()
        assignment.anchors[(1, 4)] = (0, 1)
        with pytest.raises(InvariantViolation, match="day 1"):
            assemble_day_tour(assignment, tt_weights(unit_star), 1)

    @pytest.mark.parametrize("seed", range(8))
    def test_random_trees_within_six(self, seed):
        inst = generate(GenSpec('random_tree', {"n": 9, "max_weight": 7, "max_turnover": 12}, seed))
        schedule, report = solve_minmax_tree(inst)
        assert report.feasible is True
        assert report.max <= 6 * report.lower_bound


# ===================================================================
# tree6: clients cut off by the split edge
# ===================================================================

class TestSplitOffClients:
    """A split can leave an end vertex of the sequence in neither half."""

    def test_lone_leaf(self):
        """A leaf with turnover 4 loses its only edge to the level-2 split."""
        inst = make_star([3], [4])
        assignment = recurse_tree_schedule(inst)
        assert assignment.g[(0, 4)] == frozenset({1})
        assert assignment.bridges[(0, 4)] == frozenset({(0, 1)})
        assert assignment.split_clients == 1
        schedule, report = solve_minmax_tree(inst)
        assert report.feasible is True
        assert schedule.visits(4) == (1,)
        assert report.max == 6

    def test_far_end_of_halfline(self):
        """0 - 1 - 2 with weights (2, 2): call 0 mod 2 splits (01, 12) and drops 12."""
        assignment = recurse_tree_schedule(make_path([2, 2], [4, 4]))
        assert assignment.g[(0, 4)] == frozenset({1, 2})
        assert assignment.f[(0, 4)] == frozenset({(0, 1)})
        assert assignment.bridges[(0, 4)] == frozenset({(0, 1), (1, 2)})
        assert assignment.split_clients == 1
        assert assignment.call_count == 4

    def test_far_end_tour_spans_both(self):
        inst = make_path([2, 2], [7, 7])
        schedule, report = solve_minmax_tree(inst)
        assert report.feasible is True
        assert schedule.period == 4
        assert schedule.visits(4) == (1, 2)
        assert report.max == 8
        assert report.diagnostics["split_clients"] == 1

    @pytest.mark.parametrize("seed", range(12))
    def test_random_trees_every_day_connected(self, seed):
        inst = generate(GenSpec('random_tree', {"n": 30, "max_weight": 100, "max_turnover": 64}, seed))
        rounded = round_pow2(normalize(inst)[0])
        assignment = recurse_tree_schedule(rounded)
        tree = root_tree(rounded)
        for day in range(1, assignment.max_modulus + 1):
            targets, edges = day_edges(assignment, tree, day)
            assert {c for _, c in edges} >= targets
            assert all(p == tree.root or (tree.parent[p], p) in edges for p, _ in edges)
        assert assignment.call_count <= 2 * len(tree.edges())
        _, report = solve_minmax_tree(inst)
        assert report.feasible is True
        assert report.max <= 6 * report.lower_bound
