"""
Shared domain model: instances, schedules, reports, and the error classes
raised across the services. Everything here is immutable after construction
except SolveReport, which solvers fill in as they go.
"""
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from math import lcm

Rational = Fraction


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class RfttError(Exception):
    """Base class for every error raised by the workbench."""


class InstanceError(RfttError, ValueError):
    """Invalid instance; ``element`` names the offending vertex or edge."""

    def __init__(self, message: str, element=None):
        super().__init__(message)
        self.element = element


class TopologyError(InstanceError):
    """A solver was handed an instance outside its topology class."""


class GeneratorError(RfttError, ValueError):
    pass


class ScheduleError(RfttError, ValueError):
    pass


class SolutionKindError(RfttError, ValueError):
    pass


class SizeGuardError(RfttError, RuntimeError):
    pass


class InvariantViolation(RfttError, AssertionError):
    pass


# ---------------------------------------------------------------------------
# Rationals
# ---------------------------------------------------------------------------

def as_rational(value) -> Fraction:
    """Parse a weight written as a bare int or as {"num": int, "den": int}."""
    if isinstance(value, bool):
        raise InstanceError(f"weight must be a number, got {value!r}", value)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, dict) and set(value) == {'num', 'den'}:
        num, den = value['num'], value['den']
        if not all(isinstance(x, int) and not isinstance(x, bool) for x in (num, den)):
            raise InstanceError(f"weight num/den must be integers, got {value!r}", value)
        if den <= 0:
            raise InstanceError(f"weight denominator must be positive, got {den}", value)
        return Fraction(num, den)
    raise InstanceError(f"unreadable weight {value!r}", value)


def format_ratio(value: Fraction | None) -> str:
    """Six-decimal display form, rounded exactly from the rational."""
    if value is None:
        return ""
    scaled = round(Fraction(value) * 10 ** 6)
    return f"{scaled // 10 ** 6}.{scaled % 10 ** 6:06d}"


def rational_json(value: Fraction):
    value = Fraction(value)
    if value.denominator == 1:
        return value.numerator
    return {"num": value.numerator, "den": value.denominator}


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------

class Topology(str, Enum):
    STAR = 'star'
    HALFLINE = 'halfline'
    LINE = 'line'
    TREE = 'tree'
    GENERAL = 'general'

    @property
    def is_tree(self) -> bool:
        return self is not Topology.GENERAL

    @property
    def is_line(self) -> bool:
        return self in (Topology.HALFLINE, Topology.LINE)


class Objective(str, Enum):
    MIN_AVG = 'min-avg'
    MIN_MAX = 'min-max'


@dataclass(frozen=True)
class Vertex:
    id: int
    turnover: int | None = None
    effective: int | None = None

    @property
    def is_depot(self) -> bool:
        return self.turnover is None

    @property
    def tau(self) -> int | None:
        """Turnover the solvers must meet (effective if lowered, else original)."""
        return self.effective if self.effective is not None else self.turnover


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    weight: Fraction

    @property
    def key(self) -> tuple[int, int]:
        return (self.u, self.v) if self.u < self.v else (self.v, self.u)


@dataclass(frozen=True)
class Instance:
    name: str
    depot: int
    vertices: tuple[Vertex, ...]
    edges: tuple[Edge, ...]

    @cached_property
    def by_id(self) -> dict[int, Vertex]:
        return {v.id: v for v in self.vertices}

    @cached_property
    def clients(self) -> tuple[int, ...]:
        return tuple(sorted(v.id for v in self.vertices if v.id != self.depot))

    def turnover(self, vid: int) -> int:
        """Original turnover, the contract schedules are verified against."""
        return self.by_id[vid].turnover

    def tau(self, vid: int) -> int:
        return self.by_id[vid].tau

    def taus(self) -> dict[int, int]:
        return {j: self.tau(j) for j in self.clients}

    def with_effective(self, effective: dict[int, int], name: str | None = None) -> 'Instance':
        vertices = tuple(
            Vertex(v.id, v.turnover, effective.get(v.id, v.effective)) if not v.is_depot else v
            for v in self.vertices
        )
        return Instance(name or self.name, self.depot, vertices, self.edges)


@dataclass(frozen=True)
class PruneEvent:
    vertex: int
    original: int
    effective: int
    witness: int

    def describe(self) -> str:
        return (f"vertex {self.vertex}: turnover {self.original} dominated by "
                f"descendant {self.witness} (effective {self.effective})")


@dataclass(frozen=True)
class DistanceMatrix:
    vertices: tuple[int, ...]
    rows: dict

    def __call__(self, u: int, v: int) -> Fraction:
        return self.rows[u][v]

    def walk_cost(self, order) -> Fraction:
        return sum((self.rows[a][b] for a, b in zip(order, order[1:])), Fraction(0))


# ---------------------------------------------------------------------------
# Tours and schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]
    cost: Fraction

    @property
    def stops(self) -> tuple[int, ...]:
        """Visit order without the depot bookends."""
        return self.order[1:-1]

    @staticmethod
    def idle(depot: int) -> 'Tour':
        return Tour((depot, depot), Fraction(0))


@dataclass(frozen=True)
class Schedule:
    """Cyclic plan; ``days[d - 1]`` is day d's visit order, depot implied at both ends."""
    period: int
    days: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.period < 1:
            raise ScheduleError(f"schedule period must be positive, got {self.period}")
        if len(self.days) != self.period:
            raise ScheduleError(f"schedule has {len(self.days)} days for period {self.period}")

    def visits(self, day: int) -> tuple[int, ...]:
        return self.days[(day - 1) % self.period]

    def tour(self, day: int, depot: int) -> tuple[int, ...]:
        return (depot, *self.visits(day), depot)

    @staticmethod
    def from_tours(tours) -> 'Schedule':
        days = tuple(tuple(t.stops) for t in tours)
        return Schedule(len(days), days)


@dataclass(frozen=True)
class CongruenceClass:
    residue: int
    modulus: int
    vertices: frozenset

    def __post_init__(self):
        if self.modulus < 1:
            raise ScheduleError(f"class modulus must be positive, got {self.modulus}")
        if not 0 <= self.residue < self.modulus:
            raise ScheduleError(
                f"class residue {self.residue} outside 0..{self.modulus - 1}")

    def active(self, day: int) -> bool:
        return day % self.modulus == self.residue


@dataclass(frozen=True)
class CompactSchedule:
    classes: tuple[CongruenceClass, ...]

    @property
    def period(self) -> int:
        return lcm(*(c.modulus for c in self.classes)) if self.classes else 1

    def vertices_on(self, day: int) -> set[int]:
        out: set[int] = set()
        for c in self.classes:
            if c.active(day):
                out |= c.vertices
        return out


@dataclass(frozen=True)
class Violation:
    vertex: int
    kind: str  # never-visited | gap
    limit: int
    gap: int | None = None
    wrap: bool = False

    @property
    def description(self) -> str:
        if self.kind == 'never-visited':
            return f"{self.vertex} never visited"
        where = 'wrap' if self.wrap else 'interior'
        return f"{self.vertex}: gap {self.gap} > {self.limit} at {where}"


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    violations: tuple[Violation, ...] = ()

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "violations": [{"vertex": v.vertex, "description": v.description}
                           for v in self.violations],
        }


@dataclass(frozen=True)
class Evaluation:
    avg: Fraction
    max: Fraction
    per_day: tuple[Fraction, ...]


@dataclass
class SolveReport:
    algorithm: str
    objective: str
    instance: str
    period: int | None = None
    avg: Fraction | None = None
    max: Fraction | None = None
    lower_bound: Fraction | None = None
    feasible: bool | None = None
    runtime_ms: int = 0
    diagnostics: dict = field(default_factory=dict)
    error: str = ""

    @property
    def cost(self) -> Fraction | None:
        return self.avg if self.objective == Objective.MIN_AVG.value else self.max

    @property
    def ratio(self) -> Fraction | None:
        if self.cost is None or not self.lower_bound:
            return None
        return self.cost / self.lower_bound

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None else {"num": x.numerator, "den": x.denominator}
        return {
            "algorithm": self.algorithm,
            "objective": self.objective,
            "instance": self.instance,
            "period": self.period,
            "avg": num(self.avg),
            "max": num(self.max),
            "lower_bound": num(self.lower_bound),
            "ratio": format_ratio(self.ratio) or None,
            "feasible": self.feasible,
            "runtime_ms": self.runtime_ms,
            "diagnostics": self.diagnostics,
            "error": self.error,
        }
