"""
Tests for solver adapters and the algorithm registry.
"""
import pytest

from models import Objective, TopologyError
from services.solver_adapter import PerClassAdapter, TreeMinAvgAdapter
from services.solver_registry import SolverRegistry, build_registry
from tests.helpers.instance_helpers import make_instance

MIN_AVG = Objective.MIN_AVG.value
MIN_MAX = Objective.MIN_MAX.value


@pytest.fixture
def registry():
    return build_registry()


@pytest.fixture
def cycle():
    return make_instance({1: 2, 2: 2}, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])


class TestSolverRegistry:

    def test_all_algorithms_registered(self, registry):
        assert registry.names() == [
            'tree2', 'tree6', 'line-dp', 'classes', 'logn-minmax', 'sync', 'nondecr',
            'mst-tree', 'oracle',
        ]

    def test_unknown_algorithm(self, registry):
        with pytest.raises(ValueError, match="Unsupported algorithm: magic"):
            registry.get('magic')

    def test_error_lists_available_names(self):
        registry = SolverRegistry()
        registry.register(PerClassAdapter())
        with pytest.raises(ValueError, match="Available: classes"):
            registry.get("tree2")


class TestAdapters:

    def test_tree_adapter_refuses_general(self, cycle):
        adapter = TreeMinAvgAdapter()
        with pytest.raises(TopologyError, match="does not handle general"):
            adapter.solve(cycle, MIN_AVG)

    def test_objective_checked(self, unit_star):
        with pytest.raises(ValueError, match="does not handle objective"):
            TreeMinAvgAdapter().solve(unit_star, MIN_MAX)

    def test_general_adapter_runs_everywhere(self, cycle, unit_star):
        adapter = PerClassAdapter()
        for inst in (cycle, unit_star):
            schedule, report = adapter.solve(inst, MIN_MAX)
            assert report.feasible is True
            assert report.algorithm == 'classes'

    @pytest.mark.parametrize("name", ['tree2', 'tree6', 'classes', 'logn-minmax', 'sync',
                                      'nondecr', 'mst-tree', 'oracle'])
    def test_every_adapter_on_star(self, registry, unit_star, name):
        adapter = registry.get(name)
        for objective in adapter.objectives():
            _, report = adapter.solve(unit_star, objective)
            assert report.feasible is True
            assert report.cost >= report.lower_bound
