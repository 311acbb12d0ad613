"""Empirical checks of the 10*lam*n proximity bound and the case analysis behind it.

Notation: ``a = (d, b)`` is an optimum of DR'(lam) and ``a_star = (d*, b*)``
the optimum of DR' minimising ``||d* - d||_1 + ||b* - b||_1`` against it
(chosen by :func:`dockalloc.oracle.min_distance_optimum`).  The case
predicates and lemma checks are only meaningful for that particular anchor;
feeding an arbitrary optimum can and does produce spurious failures.

Six station sets classify coordinate differences of size at least ``lam``:

====  ===========================================
I1    d - d* >= lam and b - b* <= -lam
I2    d - d* <= -lam and b - b* >= lam
I3    x - x* >= lam and d - d* >= lam
I4    x - x* <= -lam and d - d* <= -lam
I5    x - x* >= lam and b - b* >= lam
I6    x - x* <= -lam and b - b* <= -lam
====  ===========================================
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from ._lattice import CostCache
from .errors import CheckFailure, PreconditionError
from .model import Allocation, Instance, l1_distance, linf_distance
from .oracle import OptimaSet, ProblemSpec, all_optima, min_distance_optimum
from .transform import DrPrime, RelaxedOptimum, derive_dr_prime

P_CASES = ("P1", "P2", "P3", "P4")
Q_CASES = ("Q1", "Q2", "Q3", "Q4")
N_CASES = ("N1", "N2", "N3", "N4")
FORBIDDEN = {("P3", "Q4"), ("P4", "Q3")}


@dataclass(frozen=True)
class ISets:
    sets: tuple[frozenset[int], ...]  # I1..I6 at positions 0..5
    P: frozenset[int]
    Q: frozenset[int]

    def __getitem__(self, t: int) -> frozenset[int]:
        return self.sets[t - 1]

    def side(self, t: int, side: str) -> frozenset[int]:
        return self[t] & (self.P if side == "P" else self.Q)

    def describe(self) -> dict[str, list[int]]:
        out = {}
        for t in range(1, 7):
            out[f"I{t}"] = sorted(self[t])
            out[f"I{t}_P"] = sorted(self.side(t, "P"))
            out[f"I{t}_Q"] = sorted(self.side(t, "Q"))
        return out


def compute_isets(drp: DrPrime, lam: int, a: Allocation, a_star: Allocation) -> ISets:
    sets = [set() for _ in range(6)]
    for i in range(drp.n):
        dd = a.d[i] - a_star.d[i]
        db = a.b[i] - a_star.b[i]
        dx = dd + db
        if dd >= lam and db <= -lam:
            sets[0].add(i)
        if dd <= -lam and db >= lam:
            sets[1].add(i)
        if dx >= lam and dd >= lam:
            sets[2].add(i)
        if dx <= -lam and dd <= -lam:
            sets[3].add(i)
        if dx >= lam and db >= lam:
            sets[4].add(i)
        if dx <= -lam and db <= -lam:
            sets[5].add(i)
    return ISets(tuple(frozenset(s) for s in sets), frozenset(drp.P), frozenset(drp.Q))


@dataclass(frozen=True)
class CaseLabel:
    p_cases: tuple[str, ...]
    q_cases: tuple[str, ...]
    n_cases: tuple[str, ...]

    def combinations(self) -> list[tuple[str, str]]:
        return [(p, q) for p in self.p_cases for q in self.q_cases]


def _side_cases(isets: ISets, side: str, bdiff: int, ddiff: int, lam: int, names) -> tuple[str, ...]:
    if side == "N":
        I = lambda t: isets[t]  # noqa: E731
    else:
        I = lambda t: isets.side(t, side)  # noqa: E731
    out = []
    if not I(4) and not I(6):
        out.append(names[0])
    if not I(3) and not I(5):
        out.append(names[1])
    if side == "N":
        if not isets[2] and not I(4) and not I(5) and bdiff > -lam and ddiff < lam:
            out.append(names[2])
        if not isets[1] and not I(3) and not I(6) and bdiff < lam and ddiff > -lam:
            out.append(names[3])
    else:
        if I(3) and I(6) and not isets[2] and not I(4) and not I(5) and bdiff > -lam and ddiff < lam:
            out.append(names[2])
        if I(4) and I(5) and not isets[1] and not I(3) and not I(6) and bdiff < lam and ddiff > -lam:
            out.append(names[3])
    return tuple(out)


def classify_cases(isets: ISets, b_total_diff: int, d_total_diff: int, lam: int) -> CaseLabel:
    """Evaluate the P-, Q- and N-case predicates.

    ``b_total_diff = b(N) - b*(N)`` and ``d_total_diff = d(N) - d*(N)``.
    """
    return CaseLabel(
        _side_cases(isets, "P", b_total_diff, d_total_diff, lam, P_CASES),
        _side_cases(isets, "Q", b_total_diff, d_total_diff, lam, Q_CASES),
        _side_cases(isets, "N", b_total_diff, d_total_diff, lam, N_CASES),
    )


def table1_multiplier(p_case: str, q_case: str) -> int | None:
    """Multiple of ``lam*n`` bounding ``||x - x*||_1`` for a case combination; None if impossible."""
    if (p_case, q_case) in FORBIDDEN:
        return None
    if p_case in ("P1", "P2") and q_case in ("Q1", "Q2"):
        return 4
    if (p_case, q_case) in (("P3", "Q3"), ("P4", "Q4")):
        return 8
    return 10


def n_case_multiplier(n_case: str) -> int:
    return 4 if n_case in ("N1", "N2") else 8


@dataclass(frozen=True)
class CaseBoundVerdict:
    applied_bound: int | None
    forbidden: tuple[tuple[str, str], ...]
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.forbidden and not self.failures


def verify_case_bounds(distance: int, label: CaseLabel, lam: int, n: int) -> CaseBoundVerdict:
    """Check ``distance = ||x - x*||_1`` against every realised combination's bound (strict)."""
    forbidden = tuple(c for c in label.combinations() if c in FORBIDDEN)
    failures = []
    bounds = []
    for p, q in label.combinations():
        m = table1_multiplier(p, q)
        if m is None:
            continue
        bounds.append(m * lam * n)
        if not distance < m * lam * n:
            failures.append(f"{p}-{q}: {distance} >= {m * lam * n}")
    for nc in label.n_cases:
        bound = n_case_multiplier(nc) * lam * n
        if not distance < bound:
            failures.append(f"{nc}: {distance} >= {bound}")
    return CaseBoundVerdict(min(bounds) if bounds else None, forbidden, tuple(failures))


def verify_emptiness_lemmas(isets: ISets, b_total_diff: int, lam: int) -> list[str]:
    """Return a description of every violated emptiness claim (empty list = all hold)."""
    bad = []
    for S in ("P", "Q"):
        I = lambda t: isets.side(t, S)  # noqa: E731
        if I(3) and I(4):
            bad.append(f"I3_{S} and I4_{S} both nonempty")
        if I(5) and I(6):
            bad.append(f"I5_{S} and I6_{S} both nonempty")
        if isets[1] and I(4) and I(5):
            bad.append(f"I1 nonempty but I4_{S} and I5_{S} both nonempty")
        if b_total_diff >= lam and I(4) and I(5):
            bad.append(f"b(N)-b*(N) >= lam but I4_{S} and I5_{S} both nonempty")
        if isets[2] and I(3) and I(6):
            bad.append(f"I2 nonempty but I3_{S} and I6_{S} both nonempty")
        if b_total_diff <= -lam and I(3) and I(6):
            bad.append(f"b(N)-b*(N) <= -lam but I3_{S} and I6_{S} both nonempty")
    if all(isets.side(t, s) for t, s in ((3, "P"), (6, "P"), (4, "Q"), (5, "Q"))):
        bad.append("I3_P, I6_P, I4_Q, I5_Q all nonempty")
    if all(isets.side(t, s) for t, s in ((4, "P"), (5, "P"), (3, "Q"), (6, "Q"))):
        bad.append("I4_P, I5_P, I3_Q, I6_Q all nonempty")
    return bad


# -- strict-decrease chains ---------------------------------------------------

def _supp(v: int, sign: int) -> bool:
    return v > 0 if sign > 0 else v < 0


@dataclass(frozen=True)
class MonoDecVerdict:
    clause: str
    tuples_checked: int
    steps_checked: int
    failures: tuple[dict, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.failures


def _mono_tuples(drp: DrPrime, a: Allocation, a_star: Allocation, clause: str) -> Iterable[tuple[dict, int]]:
    """Yield (index assignment, lambda' limit) for every tuple meeting the clause hypotheses."""
    n = drp.n
    P = set(drp.P)
    dd = [a.d[i] - a_star.d[i] for i in range(n)]
    db = [a.b[i] - a_star.b[i] for i in range(n)]
    dx = [dd[i] + db[i] for i in range(n)]
    same = lambda p, q: (p in P) == (q in P)  # noqa: E731
    A = [i for i in range(n) if dd[i] > 0 and dx[i] > 0]      # supp+(d-d*) & supp+(x-x*)
    H = [i for i in range(n) if dd[i] < 0 and dx[i] < 0]      # supp-(d-d*) & supp-(x-x*)
    J = [i for i in range(n) if db[i] < 0 and dx[i] < 0]      # supp-(b-b*) & supp-(x-x*)
    K = [i for i in range(n) if db[i] > 0 and dx[i] > 0]      # supp+(b-b*) & supp+(x-x*)
    S = [i for i in range(n) if dd[i] > 0 and db[i] < 0]      # supp+(d-d*) & supp-(b-b*)
    bN = sum(db)
    if clause == "i":
        for i in A:
            for h in H:
                if same(i, h):
                    yield {"i": i, "h": h}, min(dd[i], -dd[h])
    elif clause == "ii":
        for j in J:
            for k in K:
                if same(j, k):
                    yield {"j": j, "k": k}, min(-db[j], db[k])
    elif clause == "iii":
        for i in H:
            for j in K:
                if same(i, j):
                    yield {"i": i, "j": j}, min(-dd[i], db[j], bN)
    elif clause == "iv":
        for i in H:
            for j in K:
                if not same(i, j):
                    continue
                for s in S:
                    yield {"i": i, "j": j, "s": s}, min(-dd[i], db[j], dd[s], -db[s])
    elif clause == "v":
        for i in A:
            for j in J:
                for h in H:
                    for k in K:
                        a_case = i in P and j in P and h not in P and k not in P
                        b_case = i not in P and j not in P and h in P and k in P
                        if a_case or b_case:
                            yield {"i": i, "j": j, "h": h, "k": k}, min(dd[i], -db[j], -dd[h], db[k])
    else:
        raise ValueError(f"unknown clause {clause!r}")


# per clause: list of (variable, role, sign) moved by one unit per lambda' step
_MONO_MOVES = {
    "i": (("d", "i", -1), ("d", "h", +1)),
    "ii": (("b", "j", +1), ("b", "k", -1)),
    "iii": (("d", "i", +1), ("b", "j", -1)),
    "iv": (("d", "s", -1), ("d", "i", +1), ("b", "s", +1), ("b", "j", -1)),
    "v": (("d", "i", -1), ("d", "h", +1), ("b", "j", +1), ("b", "k", -1)),
}


def verify_mono_dec(drp: DrPrime, lam: int, a: Allocation, a_star: Allocation, clause: str,
                    cache: CostCache | None = None) -> MonoDecVerdict:
    """Check the strict-decrease chains of one clause for every admissible tuple and lambda'.

    ``lam`` is accepted for interface symmetry; the chains move one unit per
    step and do not depend on it.
    """
    cc = cache if cache is not None else CostCache(drp.base.cost)
    moves = _MONO_MOVES[clause]
    tuples = steps = 0
    failures = []
    for idx, limit in _mono_tuples(drp, a, a_star, clause):
        tuples += 1
        d, b = list(a.d), list(a.b)
        prev = cc.total(d, b)
        for lp in range(limit):
            for var, role, sgn in moves:
                (d if var == "d" else b)[idx[role]] += sgn
            cur = cc.total(d, b)
            steps += 1
            if not prev > cur:
                failures.append({"indices": dict(idx), "lambda_prime": lp, "before": prev, "after": cur})
            prev = cur
    return MonoDecVerdict(clause, tuples, steps, tuple(failures))


# -- full reports -------------------------------------------------------------


def relaxed_by_oracle(inst: Instance, cap: int | None = None) -> RelaxedOptimum:
    """Relaxed optimum of minimum distance to ``x_bar`` chosen by enumeration (ties lexicographic)."""
    opt = all_optima(ProblemSpec(inst, "relaxed"), cap)
    x_bar = inst.x_bar
    best = min(opt.optima, key=lambda a: (l1_distance(a.x, x_bar), a.key()))
    dist = l1_distance(best.x, x_bar)
    return RelaxedOptimum(best, opt.optimal_value, dist, dist <= 2 * inst.gamma)


@dataclass
class OptimumCheck:
    """All checks for one DR'(lam) optimum ``a`` against its min-distance anchor."""

    a: Allocation
    anchor: Allocation
    min_l1: int
    min_linf: int
    anchor_l1: int
    isets: ISets
    label: CaseLabel
    case_bounds: CaseBoundVerdict
    emptiness: list[str]
    mono_dec: dict[str, MonoDecVerdict]
    eq2_ok: bool


@dataclass
class ProximityReport:
    instance_id: str
    lam: int
    n: int
    dist_l1: int
    dist_linf: int
    bound_l1: int
    bound_linf: int
    label: CaseLabel
    table1_bound: int | None
    checks: list[OptimumCheck] = field(default_factory=list)

    @property
    def theorem_ok(self) -> bool:
        return self.dist_l1 < self.bound_l1

    @property
    def corollary_ok(self) -> bool:
        return self.dist_linf < self.bound_linf

    @property
    def occurrence_ok(self) -> bool:
        return all(c.label.p_cases and c.label.q_cases for c in self.checks)

    @property
    def forbidden_ok(self) -> bool:
        return all(not c.case_bounds.forbidden for c in self.checks)

    @property
    def table1_ok(self) -> bool:
        return all(not c.case_bounds.failures for c in self.checks)

    @property
    def emptiness_ok(self) -> bool:
        return all(not c.emptiness for c in self.checks)

    @property
    def mono_dec_ok(self) -> bool:
        return all(v.ok for c in self.checks for v in c.mono_dec.values())

    @property
    def eq2_ok(self) -> bool:
        return all(c.eq2_ok for c in self.checks)

    @property
    def passed(self) -> bool:
        return (self.theorem_ok and self.corollary_ok and self.occurrence_ok and self.forbidden_ok
                and self.table1_ok and self.emptiness_ok and self.mono_dec_ok and self.eq2_ok)

    def flags(self) -> dict[str, bool]:
        return {name: getattr(self, name) for name in (
            "theorem_ok", "corollary_ok", "eq2_ok", "occurrence_ok", "forbidden_ok",
            "table1_ok", "emptiness_ok", "mono_dec_ok")}


class ProximityLab:
    """Caches the oracle objects for one instance so several ``lam`` can share them."""

    def __init__(self, inst: Instance, instance_id: str = "", cap: int | None = None):
        self.inst = inst
        self.instance_id = instance_id
        self.cap = cap
        self.relaxed = relaxed_by_oracle(inst, cap)
        if self.relaxed.satisfies_l1:
            raise PreconditionError("relaxed optimum meets the l1 budget; proximity is trivial here")
        self.drp = derive_dr_prime(inst, self.relaxed)
        self.cc = CostCache(inst.cost)
        self._optima: dict[int, OptimaSet] = {}

    def optima(self, lam: int) -> OptimaSet:
        if lam not in self._optima:
            self._optima[lam] = all_optima(ProblemSpec.dr_prime(self.drp, lam), self.cap)
        return self._optima[lam]

    def check_optimum(self, a: Allocation, lam: int, exact: OptimaSet) -> OptimumCheck:
        drp = self.drp
        x = a.x
        min_l1 = min(l1_distance(o.x, x) for o in exact.optima)
        min_linf = min(linf_distance(o.x, x) for o in exact.optima)
        anchor = min_distance_optimum(exact, a)
        anchor_l1 = l1_distance(anchor.x, x)
        isets = compute_isets(drp, lam, a, anchor)
        bdiff = sum(a.b) - sum(anchor.b)
        ddiff = sum(a.d) - sum(anchor.d)
        label = classify_cases(isets, bdiff, ddiff, lam)
        xs = anchor.x
        xp = sum(x[i] for i in drp.P)
        xq = sum(x[i] for i in drp.Q)
        eq2 = (xp <= drp.xi_P == sum(xs[i] for i in drp.P)
               and xq >= drp.xi_Q == sum(xs[i] for i in drp.Q))
        return OptimumCheck(
            a, anchor, min_l1, min_linf, anchor_l1, isets, label,
            verify_case_bounds(anchor_l1, label, lam, drp.n),
            verify_emptiness_lemmas(isets, bdiff, lam),
            {c: verify_mono_dec(drp, lam, a, anchor, c, self.cc) for c in _MONO_MOVES},
            eq2,
        )

    def report(self, lam: int) -> ProximityReport:
        exact = self.optima(1)
        scaled = self.optima(lam)
        checks = [self.check_optimum(a, lam, exact) for a in scaled.optima]
        worst = max(checks, key=lambda c: (c.min_l1, c.anchor_l1))
        n = self.inst.n
        bound = 10 * lam * n
        return ProximityReport(
            self.instance_id, lam, n,
            max(c.min_l1 for c in checks), max(c.min_linf for c in checks),
            bound, bound, worst.label, worst.case_bounds.applied_bound, checks)

    def composed(self, lam: int, nu: int) -> tuple[int, int]:
        """Worst over DR'(lam*nu) optima of the l1 distance to the nearest DR'(lam) optimum, and the bound."""
        coarse = self.optima(lam * nu)
        fine = self.optima(lam)
        worst = max(min(l1_distance(o.x, a.x) for o in fine.optima) for a in coarse.optima)
        return worst, 10 * lam * nu * self.inst.n


def verify_proximity(inst: Instance, lam: int, instance_id: str = "", cap: int | None = None) -> ProximityReport:
    return ProximityLab(inst, instance_id, cap).report(lam)


def perturbed_anchor(a: Allocation, P: Iterable[int], Q: Iterable[int], lam: int,
                     pattern: str = "P3-Q4") -> Allocation | None:
    """A deliberately wrong anchor realising a forbidden or lemma-violating pattern.

    ``"P3-Q4"`` shifts units so that the forbidden P3-Q4 combination appears;
    ``"I3-I4"`` makes I3_P and I4_P both nonempty.  Returns None when ``a``
    lacks the stations or units to build the pattern.
    """
    P, Q = list(P), list(Q)
    d, b = list(a.d), list(a.b)
    if pattern == "P3-Q4":
        if len(P) < 2 or len(Q) < 2:
            return None
        p0 = next((i for i in P if d[i] >= lam), None)
        if p0 is None:
            return None
        p1 = next(i for i in P if i != p0)
        q1 = next((i for i in Q if b[i] >= lam), None)
        if q1 is None:
            return None
        q0 = next(i for i in Q if i != q1)
        d[p0] -= lam      # p0 in I3: d - d* = lam
        b[p1] += lam      # p1 in I6: b - b* = -lam
        d[q0] += lam      # q0 in I4: d - d* = -lam
        b[q1] -= lam      # q1 in I5: b - b* = lam
    elif pattern == "I3-I4":
        side = P if len(P) >= 2 else Q
        if len(side) < 2:
            return None
        p0 = next((i for i in side if d[i] >= lam), None)
        if p0 is None:
            return None
        p1 = next(i for i in side if i != p0)
        d[p0] -= lam
        d[p1] += lam
    else:
        raise ValueError(f"unknown pattern {pattern!r}")
    return Allocation(tuple(d), tuple(b))


def require(report: ProximityReport) -> ProximityReport:
    """Raise :class:`CheckFailure` with a witness dump if any check failed."""
    if not report.passed:
        bad = [name for name, ok in report.flags().items() if not ok]
        witness = {"instance": report.instance_id, "lambda": report.lam, "failed": bad}
        for c in report.checks:
            if c.emptiness or c.case_bounds.forbidden or c.case_bounds.failures:
                witness.setdefault("optima", []).append({
                    "a": c.a.to_json(), "anchor": c.anchor.to_json(), "isets": c.isets.describe(),
                    "emptiness": c.emptiness, "forbidden": c.case_bounds.forbidden,
                    "case_bound_failures": c.case_bounds.failures})
        raise CheckFailure(f"proximity checks failed for {report.instance_id} lam={report.lam}: {bad}", witness)
    return report


__all__ = [
    "ISets", "CaseLabel", "CaseBoundVerdict", "MonoDecVerdict", "ProximityReport", "ProximityLab",
    "compute_isets", "classify_cases", "table1_multiplier", "verify_case_bounds",
    "verify_emptiness_lemmas", "verify_mono_dec", "verify_proximity", "relaxed_by_oracle",
    "perturbed_anchor", "require",
]
