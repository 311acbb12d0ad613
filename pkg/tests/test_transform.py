from __future__ import annotations

import dataclasses
import itertools

import pytest

from dockalloc import (Allocation, CostModel, InfeasibleError, Instance, PreconditionError,
                       derive_dr_prime, gamma_min, scale_view, shrink_window, solve_relaxed)
from dockalloc.generate import gen
from dockalloc.model import l1_distance
from dockalloc.oracle import ProblemSpec, all_optima, enumerate_feasible
from dockalloc.transform import split_pq

from conftest import total_cost


def relaxed_recount(inst):
    """(min cost, min distance among cost minimisers) by nested loops."""
    best = None
    for x in itertools.product(*(range(inst.ell[i], inst.u[i] + 1) for i in range(inst.n))):
        if sum(x) != inst.D + inst.B:
            continue
        for b in itertools.product(*(range(v + 1) for v in x)):
            if sum(b) > inst.B:
                continue
            d = tuple(x[i] - b[i] for i in range(inst.n))
            key = (total_cost(inst, d, b), l1_distance(x, inst.x_bar))
            best = key if best is None or key < best else best
    return best


def test_relaxed_zero_cost_returns_initial_totals():
    inst = Instance(3, (1, 2, 0), (1, 0, 2), (0, 0, 0), (5, 5, 5), 0, CostModel.zero(3))
    r = solve_relaxed(inst)
    assert r.distance == 0 and r.cost == 0 and r.satisfies_l1


def test_relaxed_e1_matches_recount(e1):
    r = solve_relaxed(e1)
    assert (r.cost, r.distance) == relaxed_recount(e1) == (1, 4)
    assert r.satisfies_l1


def test_relaxed_matches_recount_on_random_instances():
    for inst in gen(3, 3, 5, 4, "mixed", 40):
        r = solve_relaxed(inst)
        assert (r.cost, r.distance) == relaxed_recount(inst)


def test_relaxed_infeasible_bound_sums():
    inst = Instance(2, (3, 3), (1, 1), (0, 0), (3, 3), 4, CostModel.zero(2))
    with pytest.raises(InfeasibleError) as err:
        solve_relaxed(inst)
    assert "sum(u)" in err.value.certificate


def test_split_pq_cases(e1):
    inst = Instance(2, (1, 1), (1, 1), (0, 0), (4, 4), 1, CostModel.zero(2))
    assert split_pq(inst, solve_relaxed(inst)) == ((), (0, 1))
    single = Instance(1, (2,), (3,), (0,), (9,), 2, CostModel.zero(1))
    assert split_pq(single, solve_relaxed(single)) == ((), (0,))
    r = solve_relaxed(e1)
    x, x_bar = r.alloc.x, e1.x_bar
    P, Q = split_pq(e1, r)
    assert P == tuple(i for i in range(2) if x[i] > x_bar[i]) == (0,)
    assert Q == (1,)


def test_derive_dr_prime_e1(e1):
    with pytest.raises(PreconditionError):
        derive_dr_prime(e1, solve_relaxed(e1))
    drp = derive_dr_prime(e1, solve_relaxed(e1), allow_within_budget=True)
    x_bar = e1.x_bar
    assert drp.xi_P == sum(x_bar[i] for i in drp.P) + 2
    assert drp.xi_Q == sum(x_bar[i] for i in drp.Q) - 2
    # station 0 in P: ell'(0) = max(0, 3); station 1 in Q with u = 6 > 3: u'(1) = 3
    assert drp.ell_p == (3, 0) and drp.u_p == (6, 3)


def test_reference_is_dr_prime_feasible():
    for inst in gen(11, 3, 6, 5, "mixed", 60):
        r = solve_relaxed(inst)
        drp = derive_dr_prime(inst, r, allow_within_budget=True)
        ref = drp.reference
        spec = ProblemSpec.dr_prime(drp)
        assert spec.x_ok(ref.x) and sum(ref.b) <= inst.B
        assert 0 <= drp.gamma_min <= inst.gamma


def test_gamma_min_examples(e1):
    drp = derive_dr_prime(e1, solve_relaxed(e1), allow_within_budget=True)
    assert gamma_min(drp) == 0
    raised = dataclasses.replace(e1, ell=(5, 0))
    drp = derive_dr_prime(raised, solve_relaxed(raised), allow_within_budget=True)
    assert 0 in drp.P
    levels = [l1_distance(x, raised.x_bar) // 2
              for x in itertools.product(range(7), range(7))
              if ProblemSpec.dr_prime(drp).x_ok(x)]
    assert gamma_min(drp) == min(levels) == 2
    with pytest.raises(InfeasibleError):
        gamma_min(dataclasses.replace(drp, base=dataclasses.replace(raised, gamma=1)))


def test_infeasible_dr_prime_raises():
    inst = Instance(2, (0, 4), (0, 0), (3, 0), (6, 6), 1, CostModel.zero(2))
    r = solve_relaxed(inst)
    with pytest.raises(InfeasibleError):
        derive_dr_prime(inst, r, allow_within_budget=True)


def test_scale_view_lambda_one_is_dr_prime(e1_tight):
    drp = derive_dr_prime(e1_tight, solve_relaxed(e1_tight))
    view = scale_view(drp, 1)
    box = ProblemSpec(e1_tight, "relaxed")
    admitted = {a for a in enumerate_feasible(box) if view.admits(a)}
    assert admitted == set(enumerate_feasible(ProblemSpec.dr_prime(drp)))


def test_reference_admitted_in_every_view():
    for inst in gen(12, 3, 8, 5, "mixed", 40):
        r = solve_relaxed(inst)
        if r.satisfies_l1:
            continue
        drp = derive_dr_prime(inst, r)
        assert all(scale_view(drp, lam).admits(drp.reference) for lam in (1, 2, 3, 4, 8))


def test_scale_view_residues(e1_tight):
    drp = derive_dr_prime(e1_tight, solve_relaxed(e1_tight))
    drp = dataclasses.replace(drp, reference=Allocation((3, 2), (0, 1)))
    view = scale_view(drp, 2)
    assert view.rd[0] == 1
    lo, hi = view.x_bounds(0)
    assert (lo - view.rb[0]) % 2 == 1 and (hi - view.rb[0]) % 2 == 1
    with pytest.raises(ValueError):
        scale_view(drp, 0)


def test_shrink_window_formula(e1_tight):
    drp = derive_dr_prime(e1_tight, solve_relaxed(e1_tight))
    prev = Allocation((2, 2), (1, 1))
    small = shrink_window(drp, prev, 1)
    # +-20*n*lam = 40 around x_prev(0) = 3 is wider than [3, 6]: bounds absorb it
    assert small.u_p[0] <= 3 + 40 and small.ell_p[0] >= 3 - 40
    assert (small.ell_p, small.u_p) == (drp.ell_p, drp.u_p)
    wide = dataclasses.replace(drp, ell_p=(0, 0), u_p=(100, 100))
    shrunk = shrink_window(wide, Allocation((60, 0), (0, 0)), 1)
    assert shrunk.ell_p == (20, 0) and shrunk.u_p == (100, 40)


def test_window_keeps_an_optimum():
    for inst in gen(13, 3, 8, 6, "mixed", 60):
        r = solve_relaxed(inst)
        if r.satisfies_l1:
            continue
        drp = derive_dr_prime(inst, r)
        coarse = all_optima(ProblemSpec.dr_prime(drp, 2)).optima[0]
        fine = all_optima(ProblemSpec.dr_prime(drp, 1)).optima
        win = shrink_window(drp, coarse, 1)
        assert any(all(win.ell_p[i] <= a.x[i] <= win.u_p[i] for i in range(inst.n)) for a in fine)


def test_some_dr_optimum_has_the_sign_pattern():
    for inst in gen(14, 3, 7, 5, "mixed", 60):
        r = solve_relaxed(inst)
        drp = derive_dr_prime(inst, r, allow_within_budget=True)
        x_bar = inst.x_bar
        optima = all_optima(ProblemSpec.dr(inst)).optima
        assert any(all(a.x[i] >= x_bar[i] for i in drp.P) and all(a.x[i] <= x_bar[i] for i in drp.Q)
                   for a in optima)
