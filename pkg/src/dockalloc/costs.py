"""Per-station cost families and the multimodularity machinery.

A station cost ``c_i(d, b)`` takes the number of open docks ``d`` and docks
with bikes ``b``.  Two families are provided:

* :class:`SeparableConvex` -- ``phi(d) + psi(b) + theta(d + b)`` with
  discretely convex one-dimensional pieces.  Always multimodular.
* :class:`Table` -- an explicit finite grid ``grid[d][b]``, validated with
  :func:`validate_multimodular` when loaded from a file.

All values are :class:`fractions.Fraction`; nothing here uses floats.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence, Union

from .errors import CostDomainError, DimensionError, PreconditionError


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions, ``[num, den]`` pairs or exact strings to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        num, den = value
        if not (isinstance(num, int) and isinstance(den, int)) or den == 0:
            raise ValueError(f"bad rational pair {value!r}")
        return Fraction(num, den)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


# -- one-dimensional convex pieces -------------------------------------------


@dataclass(frozen=True)
class Quadratic:
    """``a*t**2 + b*t + c`` with ``a >= 0``."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)
    c: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        if self.a < 0:
            raise ValueError(f"quadratic coefficient must be nonnegative, got {self.a}")

    def __call__(self, t: int) -> Fraction:
        return (self.a * t + self.b) * t + self.c


@dataclass(frozen=True)
class PiecewiseLinear:
    """Convex piecewise-linear function through integer breakpoints.

    ``slopes`` has one more entry than ``breakpoints``: ``slopes[0]`` applies
    left of the first breakpoint, ``slopes[k]`` between breakpoints ``k-1``
    and ``k``.  The function takes ``value_at_origin`` at ``t = 0``.
    """

    breakpoints: tuple[int, ...] = ()
    slopes: tuple[Fraction, ...] = (Fraction(0),)
    value_at_origin: Fraction = Fraction(0)

    def __post_init__(self):
        bps = tuple(int(t) for t in self.breakpoints)
        slopes = tuple(as_fraction(s) for s in self.slopes)
        if len(slopes) != len(bps) + 1:
            raise ValueError("need exactly one more slope than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(s2 < s1 for s1, s2 in zip(slopes, slopes[1:])):
            raise ValueError("slopes must be nondecreasing")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "value_at_origin", as_fraction(self.value_at_origin))

    def _slope_at(self, t: int) -> Fraction:
        # slope of the unit segment [t, t+1]
        k = 0
        while k < len(self.breakpoints) and self.breakpoints[k] <= t:
            k += 1
        return self.slopes[k]

    def __call__(self, t: int) -> Fraction:
        value = self.value_at_origin
        if t >= 0:
            for s in range(t):
                value += self._slope_at(s)
        else:
            for s in range(t, 0):
                value -= self._slope_at(s)
        return value


ConvexSpec = Union[Quadratic, PiecewiseLinear]

ZERO = Quadratic()


# -- station cost families ----------------------------------------------------


@dataclass(frozen=True)
class SeparableConvex:
    """``phi(d) + psi(b) + theta(d + b)``; defined on all of ``Z^2_+``."""

    phi: ConvexSpec = ZERO
    psi: ConvexSpec = ZERO
    theta: ConvexSpec = ZERO

    def value(self, d: int, b: int) -> Fraction:
        return self.phi(d) + self.psi(b) + self.theta(d + b)

    def covers(self, d: int, b: int) -> bool:
        return d >= 0 and b >= 0


@dataclass(frozen=True)
class Table:
    """Explicit grid, ``grid[d][b]`` for ``0 <= d <= d_max`` and ``0 <= b <= b_max``."""

    grid: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(as_fraction(v) for v in row) for row in self.grid)
        if not rows or not rows[0]:
            raise ValueError("table grid must be nonempty")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("table grid must be rectangular")
        object.__setattr__(self, "grid", rows)

    @property
    def d_max(self) -> int:
        return len(self.grid) - 1

    @property
    def b_max(self) -> int:
        return len(self.grid[0]) - 1

    def value(self, d: int, b: int) -> Fraction:
        return self.grid[d][b]

    def covers(self, d: int, b: int) -> bool:
        return 0 <= d <= self.d_max and 0 <= b <= self.b_max


StationCost = Union[SeparableConvex, Table]


@dataclass(frozen=True)
class CostModel:
    """One cost specification per station; ``eval(i, d, b)`` is ``c_i(d, b)``."""

    stations: tuple[StationCost, ...]

    def __post_init__(self):
        object.__setattr__(self, "stations", tuple(self.stations))

    def __len__(self) -> int:
        return len(self.stations)

    @property
    def family(self) -> str:
        kinds = {type(s) for s in self.stations}
        if kinds == {SeparableConvex}:
            return "separable_convex"
        if kinds == {Table}:
            return "table"
        return "mixed"

    def eval(self, i: int, d: int, b: int) -> Fraction:
        spec = self.stations[i]
        if not spec.covers(d, b):
            raise CostDomainError(i, d, b, "outside table" if isinstance(spec, Table) else "negative argument")
        return spec.value(d, b)

    @classmethod
    def zero(cls, n: int) -> "CostModel":
        return cls(tuple(SeparableConvex() for _ in range(n)))


def eval(cost: CostModel, i: int, d: int, b: int) -> Fraction:  # noqa: A001
    return cost.eval(i, d, b)


# -- multimodularity ----------------------------------------------------------


@dataclass(frozen=True)
class MultimodularityViolation:
    """A point where one of the three defining inequalities fails (``lhs < rhs``)."""

    station: int
    point: tuple[int, int]
    inequality: int
    lhs: Fraction
    rhs: Fraction

    def __str__(self):
        a, b = self.point
        return (f"station {self.station}: inequality {self.inequality} fails at "
                f"(alpha={a}, beta={b}): {self.lhs} < {self.rhs}")


def _mm_sides(c, ineq: int, a: int, b: int) -> tuple[Fraction, Fraction]:
    if ineq == 1:
        return c(a + 1, b + 1) - c(a + 1, b), c(a, b + 1) - c(a, b)
    if ineq == 2:
        return c(a - 1, b + 1) - c(a - 1, b), c(a, b) - c(a, b - 1)
    return c(a + 1, b - 1) - c(a, b - 1), c(a, b) - c(a - 1, b)


def _mm_applicable(ineq: int, a: int, b: int, d_max: int, b_max: int) -> bool:
    # every point touched by the inequality must lie in [0, d_max] x [0, b_max]
    if ineq == 1:
        return a + 1 <= d_max and b + 1 <= b_max
    if ineq == 2:
        return a >= 1 and b >= 1 and a <= d_max and b + 1 <= b_max
    return a >= 1 and b >= 1 and a + 1 <= d_max and b <= b_max


def iter_multimodular_violations(cost: CostModel, i: int, box: tuple[int, int]) -> Iterator[MultimodularityViolation]:
    """All violations on ``box = (d_max, b_max)`` in lexicographic (alpha, beta, id) order."""
    d_max, b_max = box
    c = lambda d, b: cost.eval(i, d, b)  # noqa: E731
    for a in range(d_max + 1):
        for b in range(b_max + 1):
            for ineq in (1, 2, 3):
                if not _mm_applicable(ineq, a, b, d_max, b_max):
                    continue
                lhs, rhs = _mm_sides(c, ineq, a, b)
                if lhs < rhs:
                    yield MultimodularityViolation(i, (a, b), ineq, lhs, rhs)


def validate_multimodular(cost: CostModel, i: int, box: tuple[int, int]) -> MultimodularityViolation | None:
    """Return the first violation of the three multimodularity inequalities, or ``None``."""
    return next(iter_multimodular_violations(cost, i, box), None)


def validate_all(cost: CostModel, boxes: Sequence[tuple[int, int]]) -> MultimodularityViolation | None:
    for i, box in enumerate(boxes):
        v = validate_multimodular(cost, i, box)
        if v is not None:
            return v
    return None


@dataclass(frozen=True)
class ConvexityViolation:
    station: int
    x_fixed: int
    beta: int
    second_difference: Fraction


def diag_convexity(cost: CostModel, i: int, x_fixed: int) -> ConvexityViolation | None:
    """Check that ``beta -> c_i(x_fixed - beta, beta)`` is discretely convex."""
    if x_fixed < 0:
        raise PreconditionError("x_fixed must be nonnegative")
    vals = [cost.eval(i, x_fixed - beta, beta) for beta in range(x_fixed + 1)]
    for beta in range(1, x_fixed):
        second = vals[beta + 1] - 2 * vals[beta] + vals[beta - 1]
        if second < 0:
            return ConvexityViolation(i, x_fixed, beta, second)
    return None


# -- exchange inequalities ----------------------------------------------------

# id -> (indices needed, moves applied to (d, b); the counterpart gets the negation)
EXCHANGE_INEQUALITIES: dict[int, tuple[str, tuple[tuple[str, str, int], ...]]] = {
    3: ("ih", (("d", "i", -1), ("d", "h", +1))),
    4: ("jk", (("b", "j", +1), ("b", "k", -1))),
    5: ("ij", (("d", "i", -1), ("b", "j", +1))),
    6: ("ijs", (("d", "i", -1), ("d", "s", +1), ("b", "j", +1), ("b", "s", -1))),
    7: ("ijhk", (("d", "i", -1), ("d", "h", +1), ("b", "j", +1), ("b", "k", -1))),
}


def _sign(v: int) -> int:
    return (v > 0) - (v < 0)


# role -> required signs of (d - d', b - b', x - x'); None means unconstrained
_ROLE_SIGNS = {
    "i": (+1, None, +1),
    "j": (None, -1, -1),
    "h": (-1, None, -1),
    "k": (None, +1, +1),
    "s": (-1, +1, None),
}


@dataclass(frozen=True)
class ExchangeCheck:
    inequality: int
    indices: str
    lhs: Fraction
    rhs: Fraction

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs


def _total(cost: CostModel, d, b) -> Fraction:
    return sum((cost.eval(i, d[i], b[i]) for i in range(len(d))), Fraction(0))


def check_exchange_inequalities(cost: CostModel, a, a2, idx: Mapping[str, int]) -> list[ExchangeCheck]:
    """Evaluate every exchange inequality whose indices are all supplied in ``idx``.

    ``a`` and ``a2`` are allocations (anything with ``d`` and ``b``); ``idx``
    maps role letters ``i, j, h, k, s`` to 0-based stations.  Returns one
    :class:`ExchangeCheck` per applicable inequality (empty when none is).
    """
    d, b = list(a.d), list(a.b)
    d2, b2 = list(a2.d), list(a2.b)
    n = len(d)
    if not (len(b) == len(d2) == len(b2) == n):
        raise DimensionError("allocations must have the same station count")
    for role, st in idx.items():
        if role not in _ROLE_SIGNS:
            raise PreconditionError(f"unknown index role {role!r}")
        if not 0 <= st < n:
            raise PreconditionError(f"index {role}={st} out of range")
        want = _ROLE_SIGNS[role]
        have = (_sign(d[st] - d2[st]), _sign(b[st] - b2[st]),
                _sign(d[st] + b[st] - d2[st] - b2[st]))
        for w, h_, what in zip(want, have, ("d-d'", "b-b'", "x-x'")):
            if w is not None and w != h_:
                raise PreconditionError(f"index {role}={st} not in required support of {what}")

    base = _total(cost, d, b) + _total(cost, d2, b2)
    out = []
    for ineq, (roles, moves) in EXCHANGE_INEQUALITIES.items():
        if not all(r in idx for r in roles):
            continue
        nd, nb, md, mb = d[:], b[:], d2[:], b2[:]
        for var, role, delta in moves:
            st = idx[role]
            if var == "d":
                nd[st] += delta
                md[st] -= delta
            else:
                nb[st] += delta
                mb[st] -= delta
        rhs = _total(cost, nd, nb) + _total(cost, md, mb)
        out.append(ExchangeCheck(ineq, roles, base, rhs))
    return out
