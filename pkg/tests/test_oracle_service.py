"""
Tests for the exact oracle: configuration graphs, minimum mean cycle,
MIN-MAX threshold search and Pinwheel decisions.
"""
from fractions import Fraction
from itertools import combinations_with_replacement

import pytest

from models import Objective, SizeGuardError
from services.generator_service import gen_partition_star, gen_pinwheel
from services.oracle_service import (
    ConfigurationGraph, density, exact_minavg, exact_minmax, explore, min_mean_cycle,
    pinwheel_feasible, solve_oracle,
)
from services.schedule_service import evaluate, verify
from services.tree_solver import solve_minavg_tree, solve_minmax_tree
from tests.helpers.instance_helpers import make_star


# ===================================================================
# Configuration graph
# ===================================================================

class TestConfigurationGraph:

    def test_explore_single_client(self):
        def moves(state):
            yield 'idle', 0
            yield 'visit', 1
        graph = explore([2], moves)
        assert graph.states == [(2,), (1,)]
        # from slack 1 the idle move is invalid
        assert [label for _, label, _ in graph.succ[1]] == ['visit']

    def test_min_mean_cycle_picks_cheapest_loop(self):
        graph = ConfigurationGraph(
            states=[0, 1, 2],
            succ=[
                [(1, 'a', Fraction(4)), (2, 'b', Fraction(1))],
                [(0, 'c', Fraction(4))],
                [(2, 'd', Fraction(3)), (0, 'e', Fraction(1))],
            ],
        )
        mean, cycle = min_mean_cycle(graph)
        assert mean == 1
        assert sorted(label for _, label, _ in cycle) == ['b', 'e']


# ===================================================================
# MIN-AVG
# ===================================================================

class TestExactMinAvg:

    def test_unit_star(self):
        value, schedule = exact_minavg(make_star([1, 1], [2, 2]))
        assert value == 2
        assert evaluate(make_star([1, 1], [2, 2]), schedule).avg == 2

    def test_single_daily_client(self):
        value, schedule = exact_minavg(make_star([1], [1]))
        assert value == 2
        assert schedule.period == 1

    def test_series_parallel_gadget(self):
        inst = gen_pinwheel([2, 4, 4], 'sp')
        value, schedule = exact_minavg(inst)
        assert value == 6
        assert verify(inst, schedule).feasible

    def test_matches_tree_bound_on_power_of_two_star(self, unit_star):
        value, _ = exact_minavg(unit_star)
        _, report = solve_minavg_tree(unit_star)
        assert value == report.avg == 2

    def test_no_clients(self):
        from models import Instance, Vertex
        value, schedule = exact_minavg(Instance("empty", 0, (Vertex(0),), ()))
        assert value == 0
        assert schedule.period == 1

    def test_state_guard(self):
        with pytest.raises(SizeGuardError, match="state space"):
            exact_minavg(make_star([1, 1, 1], [5, 5, 5]), max_states=100)

    def test_client_guard(self):
        with pytest.raises(SizeGuardError, match="clients exceeds guard"):
            exact_minavg(make_star([1] * 3, [1] * 3), max_clients=2)


# ===================================================================
# MIN-MAX
# ===================================================================

class TestExactMinMax:

    def test_pinwheel_star_feasible(self, unit_star):
        value, schedule = exact_minmax(unit_star)
        assert value == 2
        assert verify(unit_star, schedule).feasible
        assert evaluate(unit_star, schedule).max == 2

    def test_pinwheel_star_infeasible(self):
        value, _ = exact_minmax(gen_pinwheel([2, 3, 6], 'star'))
        assert value == 4

    def test_partition_yes_instance(self):
        value, _ = exact_minmax(gen_partition_star([5, 5, 6, 5, 5, 6], 2))
        assert value == 32

    def test_partition_no_instance(self):
        value, _ = exact_minmax(gen_partition_star([5, 5, 5, 7, 5, 5], 2))
        assert value == 34

    def test_tree6_never_beats_oracle(self, unit_star):
        value, _ = exact_minmax(unit_star)
        _, report = solve_minmax_tree(unit_star)
        assert report.max >= value


# ===================================================================
# Pinwheel
# ===================================================================

class TestPinwheel:

    @pytest.mark.parametrize("periods,expected", [
        ([2, 4, 4], True),
        ([2, 3, 6], False),
        ([4, 4, 4, 4], True),
        ([1], True),
        ([1, 2], False),
    ])
    def test_decisions(self, periods, expected):
        assert pinwheel_feasible(periods).feasible is expected

    def test_witness_is_valid(self):
        result = pinwheel_feasible([2, 4, 4])
        witness = list(result.witness)
        period = len(witness)
        for job, p in enumerate([2, 4, 4]):
            days = [d for d, j in enumerate(witness) if j == job]
            gaps = [b - a for a, b in zip(days, days[1:])] + [days[0] + period - days[-1]]
            assert max(gaps) <= p

    @pytest.mark.parametrize("size", [1, 2, 3, pytest.param(4, marks=pytest.mark.slow)])
    def test_star_optimum_tracks_feasibility(self, size):
        """Unit star: the min-max optimum is 2 exactly when the periods are schedulable."""
        for periods in combinations_with_replacement(range(1, 7), size):
            value, _ = exact_minmax(gen_pinwheel(list(periods), 'star'))
            if pinwheel_feasible(list(periods)).feasible:
                assert value == 2, periods
            else:
                assert value >= 4, periods

    def test_density(self):
        assert density([2, 4, 4]) == 1
        assert pinwheel_feasible([2, 3, 6]).as_dict([2, 3, 6])["density"] == "1"

    def test_rejects_bad_periods(self):
        with pytest.raises(ValueError, match="positive integers"):
            pinwheel_feasible([2, 0])
        with pytest.raises(ValueError):
            pinwheel_feasible([])


class TestSolveOracle:

    @pytest.mark.parametrize("objective", [o.value for o in Objective])
    def test_report_matches_value(self, unit_star, objective):
        schedule, report = solve_oracle(unit_star, objective)
        assert report.feasible is True
        assert report.cost == Fraction(report.diagnostics["value"])
