"""Proximity-scaling solver for DR.

Each scaling phase works on DR'(lam) inside a window around the previous
phase's solution:

1. narrow the bounds to ``x_prev +- 20*n*lam``;
2. find the cheapest allocation at the lowest reachable half-distance level
   (the "gamma floor");
3. sweep the level upward one grid step at a time, each step moving ``lam``
   docks from a Q-station to a P-station, keeping the cheapest level seen.

Bike splits are always re-derived exactly for the current dock totals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from ._lattice import CostCache, best_bikes, descend, fill_to_sum, pair_moves
from .errors import InfeasibleError, PreconditionError
from .model import Allocation, Instance
from .transform import DrPrime, ScaledView, derive_dr_prime, scale_view, shrink_window, solve_relaxed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhaseRecord:
    lam: int
    moves: int
    gamma_steps: int
    levels: int
    gamma_floor: int
    gamma_top: int
    objective_after: Fraction
    window: tuple[tuple[int, ...], tuple[int, ...]]

    def to_json(self) -> dict:
        return {
            "lambda": self.lam,
            "moves": self.moves,
            "gamma_steps": self.gamma_steps,
            "levels": self.levels,
            "gamma_floor": self.gamma_floor,
            "gamma_top": self.gamma_top,
            "objective_after": [self.objective_after.numerator, self.objective_after.denominator],
            "window": {"ell": list(self.window[0]), "u": list(self.window[1])},
        }


@dataclass
class SolveTrace:
    """What the scaling driver did.

    ``initial`` solves DR'(lam0) from scratch; ``phases`` are the halving
    phases lam0/2, ..., 1, so ``total_phases == log2(lam0)``.
    """

    short_circuited: bool = False
    lam0: int | None = None
    initial: PhaseRecord | None = None
    phases: list[PhaseRecord] = field(default_factory=list)
    final_objective: Fraction | None = None
    phase_solutions: list[Allocation] = field(default_factory=list)

    @property
    def total_phases(self) -> int:
        return len(self.phases)

    @property
    def gamma_steps(self) -> int:
        recs = ([self.initial] if self.initial else []) + self.phases
        return sum(r.gamma_steps for r in recs)

    def to_json(self) -> dict:
        obj = self.final_objective
        return {
            "short_circuited": self.short_circuited,
            "lambda0": self.lam0,
            "initial": self.initial.to_json() if self.initial else None,
            "phases": [p.to_json() for p in self.phases],
            "total_phases": self.total_phases,
            "final_objective": None if obj is None else [obj.numerator, obj.denominator],
        }


@dataclass(frozen=True)
class AuxProblemSpec:
    """DR'_{gamma'}: x(P) = x_bar(P) + gamma' and x(Q) = x_bar(Q) - gamma'."""

    drp: DrPrime
    lam: int
    gamma_prime: int

    def __post_init__(self):
        if not self.drp.gamma_min <= self.gamma_prime <= self.drp.base.gamma:
            raise PreconditionError(
                f"gamma'={self.gamma_prime} outside [{self.drp.gamma_min}, {self.drp.base.gamma}]")

    def targets(self) -> tuple[int, int]:
        x_bar = self.drp.base.x_bar
        return (sum(x_bar[i] for i in self.drp.P) + self.gamma_prime,
                sum(x_bar[i] for i in self.drp.Q) - self.gamma_prime)


@dataclass(frozen=True)
class SweepStats:
    levels: int
    gamma_steps: int
    refine_moves: int
    best_level: int


class _Context:
    """Per-phase search state: the view, its bounds and a cost cache."""

    def __init__(self, drp: DrPrime, lam: int, cache: CostCache | None = None):
        self.view: ScaledView = scale_view(drp, lam)
        self.drp = drp
        self.lam = lam
        self.cc = cache if cache is not None else CostCache(drp.base.cost)
        self.lo, self.hi = self.view.bounds()
        self._memo: dict[tuple[int, ...], tuple | None] = {}

    def split(self, x) -> tuple | None:
        key = tuple(x)
        if key not in self._memo:
            v = self.view
            self._memo[key] = best_bikes(self.cc, key, v.rd, v.rb, self.lam, self.drp.base.B)
        return self._memo[key]

    def key(self, x):
        res = self.split(x)
        return None if res is None else res[1]

    def alloc(self, x) -> Allocation:
        b, _ = self.split(x)
        return Allocation(tuple(x[i] - b[i] for i in range(len(x))), b)

    def level_moves(self):
        drp = self.drp
        within_p = pair_moves(drp.P, self.lo, self.hi, self.lam)
        within_q = pair_moves(drp.Q, self.lo, self.hi, self.lam)

        def gen(x):
            yield from within_p(x)
            yield from within_q(x)
        return gen

    def refine(self, x) -> tuple[list[int], int]:
        x, _, steps = descend(list(x), self.key, self.level_moves())
        return x, steps


def bike_optimize(drp: DrPrime, a: Allocation, lam: int, cache: CostCache | None = None) -> Allocation:
    """Cheapest bike split for the dock totals of ``a`` in the ``lam`` view.

    Returns ``a`` itself when it is already as cheap as the best split.
    """
    ctx = _Context(drp, lam, cache)
    x = a.x
    res = ctx.split(x)
    if res is None:
        raise PreconditionError("allocation is not admissible in this view")
    b, cost = res
    if ctx.cc.total(a.d, a.b) <= cost:
        return a
    return Allocation(tuple(x[i] - b[i] for i in range(len(x))), b)


def _at_level(ctx: _Context, level: int, start=None) -> list[int]:
    drp = ctx.drp
    x_bar = drp.base.x_bar
    lo, hi = ctx.lo, ctx.hi
    if start is None:
        x = [lo[i] if i in drp.P else hi[i] for i in range(drp.n)]
    else:
        x = [min(max(v, lo[i]), hi[i]) for i, v in enumerate(start)]
    x = fill_to_sum(lo, hi, drp.P, sum(x_bar[i] for i in drp.P) + level, ctx.lam, x)
    if x is not None:
        x = fill_to_sum(lo, hi, drp.Q, sum(x_bar[i] for i in drp.Q) - level, ctx.lam, x)
    if x is None:
        raise InfeasibleError(f"level {level} unreachable in the lam={ctx.lam} view")
    return x


def solve_gamma_floor(drp: DrPrime, lam: int, start: Allocation | None = None,
                      cache: CostCache | None = None) -> Allocation:
    """Cheapest allocation among those closest to the initial totals (in the ``lam`` view)."""
    return _solve_floor(_Context(drp, lam, cache), start)[0]


def _solve_floor(ctx: _Context, start: Allocation | None):
    floor, _ = ctx.view.level_range()
    x = _at_level(ctx, floor, None if start is None else start.x)
    x, steps = ctx.refine(x)
    return ctx.alloc(x), steps


def gamma_sweep(drp: DrPrime, lam: int, start: Allocation,
                cache: CostCache | None = None) -> tuple[Allocation, SweepStats]:
    """Raise the level from the floor to the top one grid step at a time.

    ``start`` must be optimal at the floor level.  Each step takes the
    cheapest move of ``lam`` docks from a Q-station to a P-station, then
    re-optimises within the level.  Returns the cheapest allocation seen.
    """
    return _sweep(_Context(drp, lam, cache), start)


def _sweep(ctx: _Context, start: Allocation):
    drp = ctx.drp
    lam = ctx.lam
    floor, top = ctx.view.level_range()
    x = list(start.x)
    if drp.level(x) != floor:
        raise PreconditionError(f"sweep must start at the floor level {floor}, got {drp.level(x)}")
    best_x, best_cost, best_level = tuple(x), ctx.key(x), floor
    levels, refine_moves = 1, 0
    for g in range(floor + lam, top + 1, lam):
        cand, cand_cost = None, None
        for p in drp.P:
            if x[p] + lam > ctx.hi[p]:
                continue
            for q in drp.Q:
                if x[q] - lam < ctx.lo[q]:
                    continue
                y = list(x)
                y[p] += lam
                y[q] -= lam
                c = ctx.key(y)
                if c is not None and (cand_cost is None or c < cand_cost):
                    cand, cand_cost = y, c
        if cand is None:
            raise InfeasibleError(f"no feasible move from level {g - lam} to {g}")
        x, moved = ctx.refine(cand)
        refine_moves += moved
        levels += 1
        c = ctx.key(x)
        if c < best_cost:
            best_x, best_cost, best_level = tuple(x), c, g
    return ctx.alloc(best_x), SweepStats(levels, levels - 1, refine_moves, best_level)


def initial_lambda(inst: Instance) -> int:
    """``2**ceil(log2((D+B)/n))``, never below 1; computed in integers."""
    k = 0
    while (1 << k) * inst.n < inst.D + inst.B:
        k += 1
    return 1 << k


def _phase(drp: DrPrime, lam: int, start: Allocation | None, cc: CostCache):
    ctx = _Context(drp, lam, cc)
    floor, top = ctx.view.level_range()
    a, floor_moves = _solve_floor(ctx, start)
    a, stats = _sweep(ctx, a)
    obj = cc.total(a.d, a.b)
    rec = PhaseRecord(lam, floor_moves + stats.refine_moves + stats.gamma_steps, stats.gamma_steps,
                      stats.levels, floor, top, obj, (drp.ell_p, drp.u_p))
    return a, rec


def solve_scaling(inst: Instance) -> tuple[Allocation, SolveTrace]:
    """Full pipeline: relaxed problem, DR', then scaling phases down to lam = 1."""
    relaxed = solve_relaxed(inst)
    trace = SolveTrace()
    if relaxed.satisfies_l1:
        trace.short_circuited = True
        trace.final_objective = relaxed.cost
        return relaxed.alloc, trace
    drp = derive_dr_prime(inst, relaxed)
    cc = CostCache(inst.cost)
    lam = initial_lambda(inst)
    trace.lam0 = lam
    a, rec = _phase(drp, lam, None, cc)
    trace.initial = rec
    trace.phase_solutions.append(a)
    log.debug("initial lam=%d objective=%s", lam, rec.objective_after)
    while lam > 1:
        lam //= 2
        a, rec = _phase(shrink_window(drp, a, lam), lam, a, cc)
        trace.phases.append(rec)
        trace.phase_solutions.append(a)
        log.debug("phase lam=%d objective=%s levels=%d", lam, rec.objective_after, rec.levels)
    trace.final_objective = trace.phases[-1].objective_after if trace.phases else trace.initial.objective_after
    return a, trace
