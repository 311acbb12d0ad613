"""Brute-force ground truth for DR, DR', DR'(lam) and the fixed-level problems.

Enumeration factorises: dock-total vectors ``x`` meeting totals, bounds and
budget come first, then every bike split of each ``x``.  Costs are converted
to integers over a common denominator so that a whole split grid can be
scored with numpy without losing exactness.  Nothing here relies on
convexity; it is the reference the solver is checked against.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator

import numpy as np

from .errors import InfeasibleError, OracleCapExceeded, PreconditionError
from .model import Allocation, Instance, l1_distance
from .transform import DrPrime

DEFAULT_CAP = 10**7


def oracle_cap() -> int:
    env = os.environ.get("DOCKALLOC_ORACLE_CAP")
    return int(env) if env else DEFAULT_CAP


@dataclass(frozen=True)
class ProblemSpec:
    """Which problem to enumerate.

    ``kind`` is one of ``"DR"``, ``"relaxed"``, ``"DR'"``, ``"DR'(lam)"`` or
    ``"DR'_gamma"``.  The DR' kinds need ``drp``; ``lam`` applies to the
    scaled kind and ``gamma_prime`` to the fixed-level kind.
    """

    inst: Instance
    kind: str = "DR"
    drp: DrPrime | None = None
    lam: int = 1
    gamma_prime: int | None = None

    def __post_init__(self):
        if self.kind not in ("DR", "relaxed", "DR'", "DR'(lam)", "DR'_gamma"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind.startswith("DR'") and self.drp is None:
            raise PreconditionError(f"{self.kind} needs a DrPrime")
        if self.kind == "DR'_gamma" and self.gamma_prime is None:
            raise PreconditionError("DR'_gamma needs gamma_prime")
        if self.lam < 1:
            raise ValueError("lam must be positive")

    @classmethod
    def dr(cls, inst):
        return cls(inst, "DR")

    @classmethod
    def dr_prime(cls, drp, lam=1):
        return cls(drp.base, "DR'(lam)" if lam > 1 else "DR'", drp, lam)

    @classmethod
    def level(cls, drp, gamma_prime, lam=1):
        return cls(drp.base, "DR'_gamma", drp, lam, gamma_prime)

    @property
    def label(self) -> str:
        if self.kind == "DR'(lam)":
            return f"DR'({self.lam})"
        if self.kind == "DR'_gamma":
            return f"DR'_{self.gamma_prime}" + (f"(lam={self.lam})" if self.lam > 1 else "")
        return self.kind

    # -- constraint data --------------------------------------------------

    @cached_property
    def bounds(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if self.drp is not None and self.kind != "DR" and self.kind != "relaxed":
            return self.drp.ell_p, self.drp.u_p
        return self.inst.ell, self.inst.u

    @cached_property
    def residues(self) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
        if self.lam == 1 or self.drp is None:
            return None
        ref = self.drp.reference
        return tuple(v % self.lam for v in ref.d), tuple(v % self.lam for v in ref.b)

    def x_ok(self, x) -> bool:
        inst = self.inst
        if sum(x) != inst.D + inst.B:
            return False
        lo, hi = self.bounds
        if any(not lo[i] <= x[i] <= hi[i] for i in range(inst.n)):
            return False
        if self.kind == "DR":
            return l1_distance(x, inst.x_bar) <= 2 * inst.gamma
        if self.kind == "relaxed":
            return True
        drp = self.drp
        xp = sum(x[i] for i in drp.P)
        xq = sum(x[i] for i in drp.Q)
        if xp > drp.xi_P or xq < drp.xi_Q:
            return False
        if self.kind == "DR'_gamma":
            x_bar = inst.x_bar
            g = self.gamma_prime
            if xp != sum(x_bar[i] for i in drp.P) + g or xq != sum(x_bar[i] for i in drp.Q) - g:
                return False
        if self.residues is not None:
            rd, rb = self.residues
            if any((x[i] - rd[i] - rb[i]) % self.lam for i in range(inst.n)):
                return False
        return True

    def b_values(self, i: int, xi: int) -> list[int]:
        """Admissible bike counts at station i when its dock total is ``xi``."""
        top = min(xi, self.inst.B)
        if self.residues is None:
            return list(range(top + 1))
        rd, rb = self.residues
        lam = self.lam
        return [b for b in range(rb[i], top + 1, lam) if (xi - b - rd[i]) % lam == 0 and xi - b >= rd[i]]


def estimate_size(spec: ProblemSpec) -> int:
    """Upper bound on enumerated (x, b) points.

    Sums ``prod_i (x_i + 1)`` over every ``x`` within the bounds whose total
    is ``D + B`` (budget and congruences ignored), by a DP over stations.
    """
    lo, hi = spec.bounds
    total = spec.inst.D + spec.inst.B
    ways = {0: 1}
    for i in range(spec.inst.n):
        nxt: dict[int, int] = {}
        for s, w in ways.items():
            for v in range(lo[i], hi[i] + 1):
                if s + v > total:
                    break
                nxt[s + v] = nxt.get(s + v, 0) + w * (v + 1)
        ways = nxt
    return ways.get(total, 0)


def _check_cap(spec, cap):
    cap = oracle_cap() if cap is None else cap
    est = estimate_size(spec)
    if est > cap:
        raise OracleCapExceeded(est, cap)


def enumerate_x(spec: ProblemSpec) -> Iterator[tuple[int, ...]]:
    """Dock-total vectors meeting every x-level constraint, in lexicographic order."""
    inst = spec.inst
    lo, hi = spec.bounds
    n = inst.n
    total = inst.D + inst.B
    suffix_lo = [0] * (n + 1)
    suffix_hi = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_lo[i] = suffix_lo[i + 1] + lo[i]
        suffix_hi[i] = suffix_hi[i + 1] + hi[i]
    x = [0] * n

    def rec(i, remaining):
        if i == n:
            if remaining == 0 and spec.x_ok(x):
                yield tuple(x)
            return
        a = max(lo[i], remaining - suffix_hi[i + 1])
        b = min(hi[i], remaining - suffix_lo[i + 1])
        for v in range(a, b + 1):
            x[i] = v
            yield from rec(i + 1, remaining - v)

    yield from rec(0, total)


def enumerate_feasible(spec: ProblemSpec, cap: int | None = None) -> Iterator[Allocation]:
    """Every feasible allocation, ordered by x then lexicographic b."""
    _check_cap(spec, cap)
    B = spec.inst.B
    n = spec.inst.n
    for x in enumerate_x(spec):
        choices = [spec.b_values(i, x[i]) for i in range(n)]
        b = [0] * n

        def rec(i, used):
            if i == n:
                yield Allocation(tuple(x[k] - b[k] for k in range(n)), tuple(b))
                return
            for v in choices[i]:
                if used + v > B:
                    break
                b[i] = v
                yield from rec(i + 1, used + v)

        yield from rec(0, 0)


@dataclass(frozen=True)
class OptimaSet:
    problem: str
    optimal_value: Fraction
    optima: tuple[Allocation, ...] = field(default=())


class _IntCosts:
    """Station cost tables scaled to integers by a common denominator."""

    def __init__(self, inst: Instance, d_hi, b_hi):
        tables = []
        den = 1
        for i in range(inst.n):
            rows = [[inst.cost.eval(i, d, b) for b in range(b_hi[i] + 1)] for d in range(d_hi[i] + 1)]
            for row in rows:
                for v in row:
                    den = den * v.denominator // math.gcd(den, v.denominator)
            tables.append(rows)
        self.den = den
        ints = [[[int(v * den) for v in row] for row in rows] for rows in tables]
        big = max((abs(v) for rows in ints for row in rows for v in row), default=0)
        dtype = np.int64 if big * inst.n < 2**62 else object
        self.tables = [np.array(rows, dtype=dtype) for rows in ints]


def _scan(spec: ProblemSpec, cap, collect_all: bool):
    _check_cap(spec, cap)
    inst = spec.inst
    n = inst.n
    lo, hi = spec.bounds
    B = inst.B
    b_hi = [min(hi[i], B) for i in range(n)]
    ic = _IntCosts(inst, list(hi), b_hi)
    best_val = None
    best = []
    for x in enumerate_x(spec):
        choices = [np.array(spec.b_values(i, x[i]), dtype=np.int64) for i in range(n)]
        if any(len(c) == 0 for c in choices):
            continue
        cost = None
        bsum = None
        for i in range(n):
            bs = choices[i]
            ci = ic.tables[i][x[i] - bs, bs]
            if cost is None:
                cost, bsum = ci, bs
            else:
                cost = np.add.outer(cost, ci)
                bsum = np.add.outer(bsum, bs)
        ok = bsum <= B
        if not ok.any():
            continue
        m = cost[ok].min()
        if best_val is None or m < best_val:
            best_val, best = m, []
        if m == best_val:
            hits = np.argwhere(ok & (cost == m))
            if not collect_all:
                hits = hits[:1]
            for h in hits:
                b = tuple(int(choices[i][h[i]]) for i in range(n))
                best.append(Allocation(tuple(x[i] - b[i] for i in range(n)), b))
    if best_val is None:
        raise InfeasibleError(f"{spec.label}: empty feasible set")
    return Fraction(int(best_val), ic.den), best


def brute_optimum(spec: ProblemSpec, cap: int | None = None) -> tuple[Fraction, Allocation]:
    """Exact optimal value and the lexicographically smallest ``(d, b)`` attaining it."""
    value, optima = _scan(spec, cap, collect_all=True)
    return value, min(optima, key=Allocation.key)


def all_optima(spec: ProblemSpec, cap: int | None = None) -> OptimaSet:
    value, optima = _scan(spec, cap, collect_all=True)
    return OptimaSet(spec.label, value, tuple(sorted(optima, key=Allocation.key)))


def min_distance_optimum(spec_or_set, anchor: Allocation, cap: int | None = None) -> Allocation:
    """The optimum closest to ``anchor`` in ``||d* - d||_1 + ||b* - b||_1``; ties lexicographic."""
    opt = spec_or_set if isinstance(spec_or_set, OptimaSet) else all_optima(spec_or_set, cap)
    if not opt.optima:
        raise InfeasibleError("no optima to choose from")
    return min(opt.optima, key=lambda a: (l1_distance(a.d, anchor.d) + l1_distance(a.b, anchor.b), a.key()))
