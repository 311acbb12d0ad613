"""Problem data, allocations, feasibility and objective for the dock reallocation problem.

Stations are indexed from 0.  An instance stores the initial open docks
``d_bar``, initial docks with bikes ``b_bar``, per-station bounds ``ell``/``u``
on the dock total ``d + b``, the half l1 budget ``gamma`` and a cost model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .costs import CostModel, Table
from .errors import DimensionError


def _int_tuple(name: str, values: Sequence[int]) -> tuple[int, ...]:
    out = []
    for v in values:
        if isinstance(v, bool) or int(v) != v:
            raise ValueError(f"{name} must hold integers, got {v!r}")
        out.append(int(v))
    return tuple(out)


@dataclass(frozen=True)
class Allocation:
    """A candidate ``(d, b)``: open docks and docks holding a bike, per station."""

    d: tuple[int, ...]
    b: tuple[int, ...]

    def __post_init__(self):
        d = _int_tuple("d", self.d)
        b = _int_tuple("b", self.b)
        if len(d) != len(b):
            raise DimensionError(f"d has {len(d)} entries but b has {len(b)}")
        if any(v < 0 for v in d) or any(v < 0 for v in b):
            raise ValueError("allocations must be nonnegative")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return len(self.d)

    @property
    def x(self) -> tuple[int, ...]:
        return tuple(p + q for p, q in zip(self.d, self.b))

    def key(self) -> tuple:
        """Lexicographic ordering key ``(d, b)`` used for deterministic tie-breaks."""
        return (self.d, self.b)

    def to_json(self) -> dict:
        return {"d": list(self.d), "b": list(self.b)}


@dataclass(frozen=True)
class Instance:
    n: int
    d_bar: tuple[int, ...]
    b_bar: tuple[int, ...]
    ell: tuple[int, ...]
    u: tuple[int, ...]
    gamma: int
    cost: CostModel = field(compare=True)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("an instance needs at least one station")
        for name in ("d_bar", "b_bar", "ell", "u"):
            vec = _int_tuple(name, getattr(self, name))
            if len(vec) != self.n:
                raise DimensionError(f"{name} has {len(vec)} entries, expected {self.n}")
            if any(v < 0 for v in vec):
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, vec)
        if int(self.gamma) != self.gamma or self.gamma < 0:
            raise ValueError("gamma must be a nonnegative integer")
        object.__setattr__(self, "gamma", int(self.gamma))
        bad = [i for i in range(self.n) if self.ell[i] > self.u[i]]
        if bad:
            raise ValueError(f"ell > u at stations {bad}")
        if len(self.cost) != self.n:
            raise DimensionError(f"cost model has {len(self.cost)} stations, expected {self.n}")
        B = self.B
        for i, spec in enumerate(self.cost.stations):
            if isinstance(spec, Table):
                need_d, need_b = self.u[i], min(self.u[i], B)
                if spec.d_max < need_d or spec.b_max < need_b:
                    raise ValueError(
                        f"station {i}: table covers d<={spec.d_max}, b<={spec.b_max}; "
                        f"needs d<={need_d}, b<={need_b}")

    @property
    def D(self) -> int:
        return sum(self.d_bar)

    @property
    def B(self) -> int:
        return sum(self.b_bar)

    @property
    def x_bar(self) -> tuple[int, ...]:
        return tuple(p + q for p, q in zip(self.d_bar, self.b_bar))

    def cost_box(self, i: int) -> tuple[int, int]:
        """The (d_max, b_max) rectangle any feasible allocation can touch at station i."""
        return (self.u[i], min(self.u[i], self.B))

    def initial(self) -> Allocation:
        return Allocation(self.d_bar, self.b_bar)


@dataclass(frozen=True)
class Violation:
    constraint: str
    where: str
    observed: int
    required: str


@dataclass(frozen=True)
class FeasibilityVerdict:
    violations: tuple[Violation, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.feasible


def _check_dims(*vecs):
    lengths = {len(v) for v in vecs}
    if len(lengths) > 1:
        raise DimensionError(f"vector lengths differ: {sorted(lengths)}")


def l1_distance(x: Sequence[int], y: Sequence[int]) -> int:
    _check_dims(x, y)
    return sum(abs(p - q) for p, q in zip(x, y))


def linf_distance(x: Sequence[int], y: Sequence[int]) -> int:
    _check_dims(x, y)
    return max((abs(p - q) for p, q in zip(x, y)), default=0)


def check_feasible_dr(inst: Instance, a: Allocation) -> FeasibilityVerdict:
    """List every violated constraint of DR for allocation ``a``."""
    if a.n != inst.n:
        raise DimensionError(f"allocation has {a.n} stations, instance has {inst.n}")
    out = []
    x = a.x
    total = sum(x)
    if total != inst.D + inst.B:
        out.append(Violation("total_docks", "global", total, f"== {inst.D + inst.B}"))
    bikes = sum(a.b)
    if bikes > inst.B:
        out.append(Violation("bike_budget", "global", bikes, f"<= {inst.B}"))
    dist = l1_distance(x, inst.x_bar)
    if dist > 2 * inst.gamma:
        out.append(Violation("l1_budget", "global", dist, f"<= {2 * inst.gamma}"))
    for i in range(inst.n):
        if x[i] < inst.ell[i]:
            out.append(Violation("lower_bound", f"station {i}", x[i], f">= {inst.ell[i]}"))
        if x[i] > inst.u[i]:
            out.append(Violation("upper_bound", f"station {i}", x[i], f"<= {inst.u[i]}"))
    # Allocation enforces nonnegativity at construction, so there is nothing to add here.
    return FeasibilityVerdict(tuple(out))


def objective(inst: Instance, a: Allocation) -> Fraction:
    """Exact total cost ``sum_i c_i(d(i), b(i))``."""
    if a.n != inst.n:
        raise DimensionError(f"allocation has {a.n} stations, instance has {inst.n}")
    return sum((inst.cost.eval(i, a.d[i], a.b[i]) for i in range(inst.n)), Fraction(0))
