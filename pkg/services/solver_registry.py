"""Registry of solver adapters, keyed by algorithm name."""
from services.solver_adapter import (
    LineDpAdapter, LognMinMaxAdapter, NonDecreasingAdapter, OracleAdapter, PerClassAdapter,
    SolverAdapter, SpanningTreeAdapter, SyncAdapter, TreeMinAvgAdapter, TreeMinMaxAdapter,
)


class SolverRegistry:

    def __init__(self):
        self._adapters: dict[str, SolverAdapter] = {}

    def register(self, adapter: SolverAdapter):
        self._adapters[adapter.name()] = adapter

    def get(self, name: str) -> SolverAdapter:
        adapter = self._adapters.get(name)
        if not adapter:
            raise ValueError(f"Unsupported algorithm: {name}. Available: {', '.join(self.names())}")
        return adapter

    def names(self) -> list[str]:
        return list(self._adapters)


def build_registry(oracle_max_states: int | None = None,
                   oracle_max_clients: int | None = None) -> SolverRegistry:
    registry = SolverRegistry()
    for adapter in (
        TreeMinAvgAdapter(), TreeMinMaxAdapter(), LineDpAdapter(), PerClassAdapter(),
        LognMinMaxAdapter(), SyncAdapter(), NonDecreasingAdapter(), SpanningTreeAdapter(),
        OracleAdapter(oracle_max_states, oracle_max_clients),
    ):
        registry.register(adapter)
    return registry
