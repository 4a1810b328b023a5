"""
SolverAdapter abstraction: one adapter per algorithm name.
Each adapter says which objectives and topologies it handles and wraps
its solver behind a uniform solve().
"""
from abc import ABC, abstractmethod

from models import Instance, Objective, Topology, TopologyError
from services.general_solver import solve_minavg_sync, solve_minmax_logn, solve_per_class, solve_spanning_tree
from services.instance_service import classify
from services.line_solver import solve_minavg_line
from services.nondecreasing_service import solve_minavg_nondecr
from services.oracle_service import solve_oracle
from services.tree_solver import solve_minavg_tree, solve_minmax_tree

BOTH = (Objective.MIN_AVG.value, Objective.MIN_MAX.value)


class SolverAdapter(ABC):

    @abstractmethod
    def name(self) -> str:
        ...

    @abstractmethod
    def objectives(self) -> tuple[str, ...]:
        ...

    def accepts(self, topology: Topology) -> bool:
        """Topologies the solver is defined on; everything by default."""
        return True

    def check(self, instance: Instance, objective: str):
        if objective not in self.objectives():
            raise ValueError(f"{self.name()} does not handle objective {objective}")
        topology = classify(instance)
        if not self.accepts(topology):
            raise TopologyError(f"{self.name()} does not handle {topology.value} instances",
                                instance.name)

    @abstractmethod
    def run(self, instance: Instance, objective: str):
        ...

    def solve(self, instance: Instance, objective: str):
        """Returns (Schedule or None, SolveReport)."""
        self.check(instance, objective)
        return self.run(instance, objective)


class TreeMinAvgAdapter(SolverAdapter):

    def name(self) -> str:
        return "tree2"

    def objectives(self) -> tuple[str, ...]:
        return (Objective.MIN_AVG.value,)

    def accepts(self, topology: Topology) -> bool:
        return topology.is_tree

    def run(self, instance, objective):
        return solve_minavg_tree(instance)


class TreeMinMaxAdapter(SolverAdapter):

    def name(self) -> str:
        return "tree6"

    def objectives(self) -> tuple[str, ...]:
        return (Objective.MIN_MAX.value,)

    def accepts(self, topology: Topology) -> bool:
        return topology.is_tree

    def run(self, instance, objective):
        return solve_minmax_tree(instance)


class LineDpAdapter(SolverAdapter):

    def name(self) -> str:
        return "line-dp"

    def objectives(self) -> tuple[str, ...]:
        return (Objective.MIN_AVG.value,)

    def accepts(self, topology: Topology) -> bool:
        return topology.is_line

    def run(self, instance, objective):
        return solve_minavg_line(instance)


class PerClassAdapter(SolverAdapter):

    def name(self) -> str:
        return "classes"

    def objectives(self) -> tuple[str, ...]:
        return BOTH

    def run(self, instance, objective):
        return solve_per_class(instance, objective)


class LognMinMaxAdapter(SolverAdapter):

    def name(self) -> str:
        return "logn-minmax"

    def objectives(self) -> tuple[str, ...]:
        return (Objective.MIN_MAX.value,)

    def run(self, instance, objective):
        return solve_minmax_logn(instance)


class SyncAdapter(SolverAdapter):

    def name(self) -> str:
        return "sync"

    def objectives(self) -> tuple[str, ...]:
        return (Objective.MIN_AVG.value,)

    def run(self, instance, objective):
        return solve_minavg_sync(instance)


class NonDecreasingAdapter(SolverAdapter):

    def __init__(self, method: str = 'convert'):
        self._method = method

    def name(self) -> str:
        return "nondecr"

    def objectives(self) -> tuple[str, ...]:
        return (Objective.MIN_AVG.value,)

    def run(self, instance, objective):
        return solve_minavg_nondecr(instance, self._method)


class SpanningTreeAdapter(SolverAdapter):

    def name(self) -> str:
        return "mst-tree"

    def objectives(self) -> tuple[str, ...]:
        return BOTH

    def run(self, instance, objective):
        return solve_spanning_tree(instance, objective)


class OracleAdapter(SolverAdapter):
    """Exact configuration-graph search; raises SizeGuardError past its guards."""

    def __init__(self, max_states: int | None = None, max_clients: int | None = None):
        self._max_states = max_states
        self._max_clients = max_clients

    def name(self) -> str:
        return "oracle"

    def objectives(self) -> tuple[str, ...]:
        return BOTH

    def run(self, instance, objective):
        return solve_oracle(instance, objective, self._max_states, self._max_clients)
