"""Shared machinery for working in dock-total space.

For a fixed vector of dock totals ``x`` the best bike split is a separable
convex allocation (each ``beta -> c_i(x_i - beta, beta)`` is convex for a
multimodular ``c_i``) under a single budget ``sum(b) <= B``.  With a common
step ``lam`` the greedy that keeps buying the cheapest negative marginal is
exact, so every search below works on ``x`` and re-derives ``b``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .costs import CostModel


class CostCache:
    """Memoised ``c_i(d, b)`` lookups for one cost model."""

    def __init__(self, cost: CostModel):
        self.cost = cost
        self._memo: dict[tuple[int, int, int], Fraction] = {}

    def __call__(self, i: int, d: int, b: int) -> Fraction:
        key = (i, d, b)
        v = self._memo.get(key)
        if v is None:
            v = self.cost.eval(i, d, b)
            self._memo[key] = v
        return v

    def total(self, d: Sequence[int], b: Sequence[int]) -> Fraction:
        return sum((self(i, d[i], b[i]) for i in range(len(d))), Fraction(0))


def best_bikes(cc: CostCache, x: Sequence[int], rd: Sequence[int], rb: Sequence[int],
               lam: int, B: int) -> tuple[tuple[int, ...], Fraction] | None:
    """Cheapest ``b`` with ``d = x - b``, ``b = rb (mod lam)``, ``d = rd (mod lam)``, ``sum b <= B``.

    Returns ``(b, cost)`` or ``None`` when no split exists.  Ties go to fewer
    bikes, then to the lowest station index.
    """
    n = len(x)
    b = list(rb)
    cap = []
    for i in range(n):
        room = x[i] - rd[i] - rb[i]
        if room < 0 or room % lam:
            return None
        cap.append(rb[i] + room)
    if sum(b) > B:
        return None
    vals = [cc(i, x[i] - b[i], b[i]) for i in range(n)]
    budget = B - sum(b)
    while budget >= lam:
        best_i, best_gain = -1, Fraction(0)
        for i in range(n):
            if b[i] + lam <= cap[i]:
                gain = cc(i, x[i] - b[i] - lam, b[i] + lam) - vals[i]
                if gain < best_gain:
                    best_i, best_gain = i, gain
        if best_i < 0:
            break
        b[best_i] += lam
        vals[best_i] += best_gain
        budget -= lam
    return tuple(b), sum(vals, Fraction(0))


def descend(x: list[int], key: Callable[[Sequence[int]], tuple | None],
            moves: Callable[[Sequence[int]], Iterable[tuple[int, ...]]]) -> tuple[list[int], tuple, int]:
    """Steepest descent on ``x``: apply the best strictly improving neighbour until none exists.

    ``moves(x)`` yields candidate neighbours in tie-break order; ``key``
    returns ``None`` for infeasible candidates.  Returns the final point, its
    key, and the number of accepted moves.
    """
    cur = key(x)
    steps = 0
    while True:
        best, best_key = None, cur
        for y in moves(x):
            k = key(y)
            if k is not None and k < best_key:
                best, best_key = y, k
        if best is None:
            return x, cur, steps
        x, cur = list(best), best_key
        steps += 1


def pair_moves(indices: Sequence[int], lo: Sequence[int], hi: Sequence[int], lam: int):
    """Neighbours ``x - lam*e_i + lam*e_j`` for ``i != j`` in ``indices`` within ``[lo, hi]``."""
    def gen(x):
        for i in indices:
            if x[i] - lam < lo[i]:
                continue
            for j in indices:
                if j == i or x[j] + lam > hi[j]:
                    continue
                y = list(x)
                y[i] -= lam
                y[j] += lam
                yield tuple(y)
    return gen


def fill_to_sum(lo: Sequence[int], hi: Sequence[int], stations: Sequence[int], target: int,
                lam: int, start: Sequence[int] | None = None) -> list[int] | None:
    """Pick values on the ``lam``-grid inside ``[lo, hi]`` for ``stations`` summing to ``target``.

    Starts from ``start`` (or ``lo``) and moves the lowest-index stations first.
    Other coordinates are left as in ``start``.
    """
    x = list(start) if start is not None else list(lo)
    total = sum(x[i] for i in stations)
    diff = target - total
    if diff % lam:
        return None
    for i in stations:
        if diff > 0:
            step = min(diff, (hi[i] - x[i]) // lam * lam)
        else:
            step = -min(-diff, (x[i] - lo[i]) // lam * lam)
        x[i] += step
        diff -= step
        if diff == 0:
            break
    return x if diff == 0 else None
