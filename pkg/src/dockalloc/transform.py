"""From DR to the sign-constrained problem DR' and its scaled views DR'(lam).

The pipeline is: solve the problem without the l1 budget (taking, among its
optima, one closest to the initial allocation), split stations into ``P``
(where that optimum adds docks) and ``Q`` (the rest), then tighten bounds so
that the l1 budget becomes two linear constraints on ``x(P)`` and ``x(Q)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from ._lattice import CostCache, best_bikes, descend, fill_to_sum, pair_moves
from .errors import InfeasibleError, PreconditionError
from .model import Allocation, Instance, l1_distance


@dataclass(frozen=True)
class RelaxedOptimum:
    alloc: Allocation
    cost: Fraction
    distance: int
    satisfies_l1: bool


@dataclass(frozen=True)
class DrPrime:
    """DR' data.  ``reference`` is the congruence anchor of every scaled view.

    After :func:`shrink_window` the bounds are narrowed around a previous
    phase solution; ``reference`` stays the same anchor and need not lie in
    the narrowed window.
    """

    base: Instance
    P: tuple[int, ...]
    Q: tuple[int, ...]
    xi_P: int
    xi_Q: int
    ell_p: tuple[int, ...]
    u_p: tuple[int, ...]
    reference: Allocation
    gamma_min: int

    @property
    def n(self) -> int:
        return self.base.n

    def in_p(self, i: int) -> bool:
        return i in self.P

    def level(self, x) -> int:
        """Half l1 distance of ``x`` to the initial totals, assuming the P/Q sign pattern."""
        x_bar = self.base.x_bar
        return sum(x[i] - x_bar[i] for i in self.P)


@dataclass(frozen=True)
class ScaledView:
    """DR'(lam): allocations congruent to the reference modulo ``lam``."""

    drp: DrPrime
    lam: int
    rd: tuple[int, ...]
    rb: tuple[int, ...]

    def x_bounds(self, i: int) -> tuple[int, int] | None:
        """Smallest and largest admissible dock total at station i, or None if none."""
        r = self.rd[i] + self.rb[i]
        lo = max(self.drp.ell_p[i], r)
        lo += (r - lo) % self.lam
        hi = self.drp.u_p[i]
        hi -= (hi - r) % self.lam
        if hi < lo:
            return None
        return lo, hi

    def bounds(self) -> tuple[list[int], list[int]]:
        lo, hi = [], []
        for i in range(self.drp.n):
            bnd = self.x_bounds(i)
            if bnd is None:
                raise InfeasibleError(f"station {i} admits no dock total in the lam={self.lam} view")
            lo.append(bnd[0])
            hi.append(bnd[1])
        return lo, hi

    def level_range(self) -> tuple[int, int]:
        """Smallest and largest reachable half-distance level on the view grid (top capped at gamma)."""
        drp = self.drp
        x_bar = drp.base.x_bar
        lo, hi = self.bounds()
        P, Q = drp.P, drp.Q
        floor = max(sum(lo[i] for i in P) - sum(x_bar[i] for i in P),
                    sum(x_bar[i] for i in Q) - sum(hi[i] for i in Q))
        top = min(sum(hi[i] for i in P) - sum(x_bar[i] for i in P),
                  sum(x_bar[i] for i in Q) - sum(lo[i] for i in Q),
                  drp.base.gamma)
        # reachable levels share the residue of the reference's level
        r = drp.level(drp.reference.x) % self.lam
        floor += (r - floor) % self.lam
        top -= (top - r) % self.lam
        if top < floor:
            raise InfeasibleError(f"no reachable level in the lam={self.lam} view "
                                  f"(floor {floor} > top {top})")
        return floor, top

    def admits(self, a: Allocation) -> bool:
        """Membership in DR'(lam) (window bounds included)."""
        drp = self.drp
        inst = drp.base
        x = a.x
        if sum(x) != inst.D + inst.B or sum(a.b) > inst.B:
            return False
        if sum(x[i] for i in drp.P) > drp.xi_P or sum(x[i] for i in drp.Q) < drp.xi_Q:
            return False
        for i in range(drp.n):
            if not drp.ell_p[i] <= x[i] <= drp.u_p[i]:
                return False
            if (a.d[i] - self.rd[i]) % self.lam or (a.b[i] - self.rb[i]) % self.lam:
                return False
        return True


def _relaxed_bounds(inst: Instance):
    lo, hi = list(inst.ell), list(inst.u)
    total = inst.D + inst.B
    if sum(lo) > total:
        raise InfeasibleError("relaxed problem infeasible",
                              certificate=f"sum(ell)={sum(lo)} > D+B={total}")
    if sum(hi) < total:
        raise InfeasibleError("relaxed problem infeasible",
                              certificate=f"sum(u)={sum(hi)} < D+B={total}")
    return lo, hi


def solve_relaxed(inst: Instance) -> RelaxedOptimum:
    """Minimise cost without the l1 budget; among optima, minimise the distance to ``x_bar``.

    Steepest descent over unit dock transfers between stations, each candidate
    scored by its exact best bike split, with key ``(cost, distance)``.
    """
    lo, hi = _relaxed_bounds(inst)
    cc = CostCache(inst.cost)
    zeros = (0,) * inst.n
    x_bar = inst.x_bar

    def key(x):
        res = best_bikes(cc, x, zeros, zeros, 1, inst.B)
        if res is None:
            return None
        return (res[1], l1_distance(x, x_bar))

    start = [min(max(v, lo[i]), hi[i]) for i, v in enumerate(x_bar)]
    start = fill_to_sum(lo, hi, range(inst.n), inst.D + inst.B, 1, start)
    x, (cost, dist), _ = descend(start, key, pair_moves(range(inst.n), lo, hi, 1))
    b, _ = best_bikes(cc, x, zeros, zeros, 1, inst.B)
    alloc = Allocation(tuple(x[i] - b[i] for i in range(inst.n)), b)
    return RelaxedOptimum(alloc, cost, dist, dist <= 2 * inst.gamma)


def split_pq(inst: Instance, relaxed: RelaxedOptimum) -> tuple[tuple[int, ...], tuple[int, ...]]:
    x, x_bar = relaxed.alloc.x, inst.x_bar
    P = tuple(i for i in range(inst.n) if x[i] > x_bar[i])
    Q = tuple(i for i in range(inst.n) if x[i] <= x_bar[i])
    return P, Q


def _closed_form_gamma_min(inst: Instance, P, Q, ell_p, u_p) -> int:
    x_bar = inst.x_bar
    return max(sum(ell_p[i] - x_bar[i] for i in P),
               sum(x_bar[i] - u_p[i] for i in Q),
               0)


def gamma_min(drp: DrPrime) -> int:
    """Smallest half l1 distance to the initial totals over DR' (closed form)."""
    g = _closed_form_gamma_min(drp.base, drp.P, drp.Q, drp.ell_p, drp.u_p)
    if g > drp.base.gamma:
        raise InfeasibleError(f"DR' infeasible: gamma_min={g} exceeds gamma={drp.base.gamma}",
                              certificate=f"gamma_min={g} > gamma={drp.base.gamma}")
    return g


def derive_dr_prime(inst: Instance, relaxed: RelaxedOptimum, *, allow_within_budget: bool = False) -> DrPrime:
    """Build DR' from the relaxed optimum.

    The reference solution sits at the lowest reachable level, filled
    lowest-index first, with the cheapest bike split for those totals.
    """
    if relaxed.satisfies_l1 and not allow_within_budget:
        raise PreconditionError("relaxed optimum already meets the l1 budget; DR' is not needed")
    P, Q = split_pq(inst, relaxed)
    x_bar = inst.x_bar
    in_p = set(P)
    ell_p = tuple(max(inst.ell[i], x_bar[i]) if i in in_p else inst.ell[i] for i in range(inst.n))
    u_p = tuple(inst.u[i] if i in in_p else min(inst.u[i], x_bar[i]) for i in range(inst.n))
    xi_P = sum(x_bar[i] for i in P) + inst.gamma
    xi_Q = sum(x_bar[i] for i in Q) - inst.gamma
    g = _closed_form_gamma_min(inst, P, Q, ell_p, u_p)
    if g > inst.gamma:
        raise InfeasibleError(f"DR' infeasible: gamma_min={g} exceeds gamma={inst.gamma}",
                              certificate=f"gamma_min={g} > gamma={inst.gamma}")
    x = fill_to_sum(ell_p, u_p, P, sum(x_bar[i] for i in P) + g, 1, list(ell_p))
    x = fill_to_sum(ell_p, u_p, Q, sum(x_bar[i] for i in Q) - g, 1,
                    [x[i] if i in in_p else u_p[i] for i in range(inst.n)])
    zeros = (0,) * inst.n
    b, _ = best_bikes(CostCache(inst.cost), x, zeros, zeros, 1, inst.B)
    ref = Allocation(tuple(x[i] - b[i] for i in range(inst.n)), b)
    return DrPrime(inst, P, Q, xi_P, xi_Q, ell_p, u_p, ref, g)


def scale_view(drp: DrPrime, lam: int) -> ScaledView:
    if lam < 1:
        raise ValueError(f"lambda must be a positive integer, got {lam}")
    ref = drp.reference
    return ScaledView(drp, lam, tuple(v % lam for v in ref.d), tuple(v % lam for v in ref.b))


def shrink_window(drp: DrPrime, prev: Allocation, lam: int) -> DrPrime:
    """Narrow the bounds to ``x_prev +- 20*n*lam`` (prev optimal for DR'(2*lam))."""
    if lam < 1:
        raise ValueError(f"lambda must be a positive integer, got {lam}")
    width = 20 * drp.n * lam
    x = prev.x
    ell_p = tuple(max(drp.ell_p[i], x[i] - width) for i in range(drp.n))
    u_p = tuple(min(drp.u_p[i], x[i] + width) for i in range(drp.n))
    g = _closed_form_gamma_min(drp.base, drp.P, drp.Q, ell_p, u_p)
    return replace(drp, ell_p=ell_p, u_p=u_p, gamma_min=g)
