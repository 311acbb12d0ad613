"""Acceptance criteria 1-9, exact arithmetic, no tolerances.

Each test records a one-line verdict printed in the terminal summary
under "acceptance criteria".
"""

from __future__ import annotations

import os
import random
import subprocess
import sys
import time

import pytest

from dockalloc import (Allocation, CostModel, InfeasibleError, Table, check_exchange_inequalities,
                       derive_dr_prime, diag_convexity, objective, solve_relaxed, solve_scaling,
                       validate_multimodular)
from dockalloc.costs import _ROLE_SIGNS, _sign
from dockalloc.generate import gen, random_separable, random_table
from dockalloc.model import l1_distance
from dockalloc.oracle import ProblemSpec, all_optima, brute_optimum, enumerate_x
from dockalloc.proxlab import (ProximityLab, classify_cases, compute_isets, perturbed_anchor,
                               verify_case_bounds)

from conftest import record

# -- corpora ------------------------------------------------------------------


def oracle_corpus():
    """600 instances: n in {2,3,4}, u <= 8, gamma <= 6, both cost families."""
    out = []
    for n in (2, 3, 4):
        for k, family in enumerate(("separable_convex", "table")):
            out += gen(1000 + 10 * n + k, n, 8, 6, family, 100)
    return out


def proximity_corpus():
    """Budget-violating instances; the n=4, u<=9 part carries most nontrivial case structure."""
    insts = (gen(7001, 3, 8, 6, "separable_convex", 150) + gen(7002, 3, 8, 6, "table", 150)
             + gen(7003, 4, 9, 8, "separable_convex", 150) + gen(7004, 4, 9, 8, "table", 150))
    return [i for i in insts if not solve_relaxed(i).satisfies_l1]


@pytest.fixture(scope="module")
def solved():
    t0 = time.perf_counter()
    runs = []
    for inst in oracle_corpus():
        a, trace = solve_scaling(inst)
        runs.append((inst, a, trace))
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def labs():
    out = []
    for k, inst in enumerate(proximity_corpus()):
        lab = ProximityLab(inst, f"p{k:04d}")
        out.append((lab, {lam: lab.report(lam) for lam in (2, 4)}))
    return out


# -- 1 ------------------------------------------------------------------------


def test_criterion_1_oracle_equivalence(solved):
    runs, solve_time = solved
    t0 = time.perf_counter()
    dr_bad = phase_bad = phase_checks = 0
    for inst, a, trace in runs:
        if objective(inst, a) != brute_optimum(ProblemSpec.dr(inst))[0]:
            dr_bad += 1
        if trace.short_circuited:
            continue
        drp = derive_dr_prime(inst, solve_relaxed(inst))
        records = [trace.initial] + trace.phases
        for rec, sol in zip(records, trace.phase_solutions):
            phase_checks += 1
            want = brute_optimum(ProblemSpec.dr_prime(drp, rec.lam))[0]
            if rec.objective_after != want or objective(inst, sol) != want:
                phase_bad += 1
    elapsed = solve_time + time.perf_counter() - t0
    ok = len(runs) >= 500 and dr_bad == 0 and phase_bad == 0 and elapsed < 120
    record(1, ok, f"{len(runs)} instances, DR mismatches {dr_bad}, DR'(lam) phase mismatches "
                  f"{phase_bad}/{phase_checks}, {elapsed:.1f}s (< 120s)")
    assert len(runs) >= 500
    assert dr_bad == 0 and phase_bad == 0
    assert elapsed < 120


# -- 2 ------------------------------------------------------------------------


def test_criterion_2_proximity_theorem(labs):
    bad_l1 = bad_linf = bad_composed = optima = 0
    worst_l1 = worst_linf = 0
    for lab, reports in labs:
        for lam, rep in reports.items():
            optima += len(rep.checks)
            bad_l1 += not rep.dist_l1 < 10 * lam * lab.inst.n
            bad_linf += not rep.dist_linf < 10 * lam * lab.inst.n
            worst_l1 = max(worst_l1, rep.dist_l1)
            worst_linf = max(worst_linf, rep.dist_linf)
        worst, bound = lab.composed(2, 2)
        bad_composed += not worst < bound == 40 * lab.inst.n
    ok = len(labs) >= 200 and bad_l1 == bad_linf == bad_composed == 0
    record(2, ok, f"{len(labs)} instances x lam in {{2,4}}, {optima} DR'(lam) optima; l1 violations {bad_l1} "
                  f"(max dist {worst_l1}), linf violations {bad_linf} (max {worst_linf}), "
                  f"(lam,nu)=(2,2) violations {bad_composed}")
    assert len(labs) >= 200
    assert bad_l1 == 0 and bad_linf == 0 and bad_composed == 0


# -- 3 ------------------------------------------------------------------------


def test_criterion_3_forbidden_cases(labs):
    forbidden = sum(bool(c.case_bounds.forbidden) for _, reps in labs for r in reps.values() for c in r.checks)
    detected = attempts = 0
    for lab, reps in labs:
        lam = 2
        for c in reps[lam].checks:
            bad = perturbed_anchor(c.a, lab.drp.P, lab.drp.Q, lam, "P3-Q4")
            if bad is None:
                continue
            attempts += 1
            isets = compute_isets(lab.drp, lam, c.a, bad)
            label = classify_cases(isets, sum(c.a.b) - sum(bad.b), sum(c.a.d) - sum(bad.d), lam)
            v = verify_case_bounds(l1_distance(c.a.x, bad.x), label, lam, lab.inst.n)
            detected += v.forbidden == (("P3", "Q4"),)
    ok = forbidden == 0 and detected > 0 and detected == attempts
    record(3, ok, f"forbidden P3-Q4/P4-Q3 with min-distance anchors: {forbidden}; "
                  f"negative control flagged {detected}/{attempts} perturbed anchors")
    assert forbidden == 0
    assert detected > 0 and detected == attempts


# -- 4 ------------------------------------------------------------------------


def test_criterion_4_table1_bounds(labs):
    failures = classified = 0
    combos: dict[str, int] = {}
    for _, reps in labs:
        for rep in reps.values():
            for c in rep.checks:
                classified += 1
                failures += bool(c.case_bounds.failures)
                for p, q in c.label.combinations():
                    combos[f"{p}-{q}"] = combos.get(f"{p}-{q}", 0) + 1
    ok = failures == 0 and classified > 0
    seen = ", ".join(f"{k}:{v}" for k, v in sorted(combos.items()))
    record(4, ok, f"{classified} classified optima, bound violations {failures}; combinations seen {seen}")
    assert failures == 0 and classified > 0


# -- 5 ------------------------------------------------------------------------


def test_criterion_5_case_occurrence_and_emptiness(labs):
    no_p = no_q = emptiness = classified = nonempty = 0
    for _, reps in labs:
        for rep in reps.values():
            for c in rep.checks:
                classified += 1
                no_p += not c.label.p_cases
                no_q += not c.label.q_cases
                emptiness += bool(c.emptiness)
                nonempty += any(c.isets.sets)
    ok = no_p == no_q == emptiness == 0 and nonempty > 0
    record(5, ok, f"{classified} classified optima ({nonempty} with nonempty I-sets): missing P-case {no_p}, "
                  f"missing Q-case {no_q}, emptiness-lemma violations {emptiness}")
    assert no_p == 0 and no_q == 0 and emptiness == 0
    assert nonempty > 0


def test_supporting_lemmas_corpus_wide(labs):
    """Strict-decrease chains and the x(P) <= xi_P = x*(P) pattern on the same corpus."""
    chains = 0
    for _, reps in labs:
        for rep in reps.values():
            assert rep.mono_dec_ok and rep.eq2_ok
            chains += sum(v.steps_checked for c in rep.checks for v in c.mono_dec.values())
    assert chains > 0


# -- 6 ------------------------------------------------------------------------


def _exchange_samples(rng, models, count):
    n = len(models[0])
    done = 0
    while done < count:
        cost = rng.choice(models)
        mk = lambda: Allocation(tuple(rng.randint(0, 6) for _ in range(n)),  # noqa: E731
                                tuple(rng.randint(0, 6) for _ in range(n)))
        a, a2 = mk(), mk()
        signs = [(_sign(a.d[s] - a2.d[s]), _sign(a.b[s] - a2.b[s]), _sign(a.x[s] - a2.x[s])) for s in range(n)]
        idx, used = {}, set()
        for role in rng.sample("ijhks", 5):
            want = _ROLE_SIGNS[role]
            cands = [s for s in range(n) if s not in used
                     and all(w is None or w == h for w, h in zip(want, signs[s]))]
            if cands and rng.random() < 0.9:
                idx[role] = rng.choice(cands)
                used.add(idx[role])
        checks = check_exchange_inequalities(cost, a, a2, idx)
        if checks:
            done += 1
            yield checks


def test_criterion_6_multimodularity_machinery():
    rng = random.Random(6)
    sep_bad = sum(validate_multimodular(CostModel((random_separable(rng, 12),)), 0, (12, 12)) is not None
                  for _ in range(100))

    concave = CostModel((Table([[-(d + b) ** 2 for b in range(13)] for d in range(13)]),))
    v = validate_multimodular(concave, 0, (12, 12))
    located = v is not None and (v.point, v.inequality, v.lhs, v.rhs) == ((0, 0), 1, -3, -1)

    models = [CostModel(tuple(random_table(rng, 6, 6) for _ in range(4))) for _ in range(20)]
    assert all(validate_multimodular(m, i, (6, 6)) is None for m in models for i in range(4))
    samples = list(_exchange_samples(rng, models, 1000))
    exch_bad = sum(not c.holds for checks in samples for c in checks)
    per_ineq = {k: sum(c.inequality == k for checks in samples for c in checks) for k in (3, 4, 5, 6, 7)}

    diag_bad = 0
    for m in models:
        for i in range(4):
            diag_bad += sum(diag_convexity(m, i, x) is not None for x in range(7))
    for _ in range(30):
        sep = CostModel((random_separable(rng, 12),))
        diag_bad += sum(diag_convexity(sep, 0, x) is not None for x in range(13))

    ok = sep_bad == 0 and located and len(samples) == 1000 and exch_bad == 0 and diag_bad == 0
    record(6, ok, f"separable 12x12 failures {sep_bad}/100; concave theta -> {v}; exchange failures "
                  f"{exch_bad} over {len(samples)} samples {per_ineq}; diag_convexity failures {diag_bad}")
    assert sep_bad == 0
    assert located
    assert len(samples) == 1000 and exch_bad == 0
    assert diag_bad == 0


# -- 7 ------------------------------------------------------------------------


def test_criterion_7_l1_proposition(labs):
    not_tight = value_gap = optima = 0
    for lab, _ in labs:
        inst = lab.inst
        dr = all_optima(ProblemSpec.dr(inst))
        optima += len(dr.optima)
        not_tight += sum(l1_distance(a.x, inst.x_bar) != 2 * inst.gamma for a in dr.optima)
        value_gap += dr.optimal_value != lab.optima(1).optimal_value
        solver_drp = derive_dr_prime(inst, solve_relaxed(inst))
        value_gap += dr.optimal_value != brute_optimum(ProblemSpec.dr_prime(solver_drp))[0]
    ok = not_tight == 0 and value_gap == 0
    record(7, ok, f"{len(labs)} budget-violating instances, {optima} DR optima: distance != 2*gamma {not_tight}; "
                  f"DR vs DR' value mismatches {value_gap}")
    assert not_tight == 0 and value_gap == 0


# -- 8 ------------------------------------------------------------------------


def _ceil_log2_ratio(total: int, n: int) -> int:
    m = -(-total // n)  # ceil(total / n); ceil(log2(r)) = ceil(log2(ceil(r)))
    return (m - 1).bit_length() if m > 1 else 0


def _closed_form(inst, drp, ell_p, u_p):
    x_bar = inst.x_bar
    return max(sum(ell_p[i] - x_bar[i] for i in drp.P), sum(x_bar[i] - u_p[i] for i in drp.Q), 0)


def test_criterion_8_pipeline_structure(solved):
    runs, _ = solved
    phase_bad = level_bad = mono_bad = gmin_bad = pipelines = phases_seen = 0
    for inst, _, trace in runs:
        # gamma_min against the definitional minimum, on every instance
        r = solve_relaxed(inst)
        try:
            drp = derive_dr_prime(inst, r, allow_within_budget=True)
            closed = drp.gamma_min
        except InfeasibleError:
            drp, closed = None, None
        if drp is None:
            gmin_bad += next(enumerate_x(ProblemSpec.dr(inst)), None) is not None
        else:
            levels = [l1_distance(x, inst.x_bar) // 2 for x in enumerate_x(ProblemSpec.dr_prime(drp))]
            gmin_bad += not levels or min(levels) != closed
        if trace.short_circuited:
            continue
        pipelines += 1
        phase_bad += trace.total_phases != _ceil_log2_ratio(inst.D + inst.B, inst.n)
        recs = [trace.initial] + trace.phases
        for rec in recs:
            phases_seen += 1
            g_min = _closed_form(inst, drp, *rec.window)
            level_bad += rec.levels != (inst.gamma - g_min) // rec.lam + 1
        objs = [rec.objective_after for rec in recs]
        mono_bad += any(x < y for x, y in zip(objs, objs[1:]))
    ok = phase_bad == level_bad == mono_bad == gmin_bad == 0 and pipelines > 0
    record(8, ok, f"{pipelines} scaling runs: phase-count mismatches {phase_bad}; sweep level-count mismatches "
                  f"{level_bad}/{phases_seen}; non-monotone traces {mono_bad}; gamma_min closed form vs "
                  f"enumeration mismatches {gmin_bad}/{len(runs)}")
    assert pipelines > 0
    assert phase_bad == 0 and level_bad == 0 and mono_bad == 0 and gmin_bad == 0


# -- 9 ------------------------------------------------------------------------


def _cli(args, cwd, hashseed):
    env = dict(os.environ, PYTHONHASHSEED=str(hashseed))
    return subprocess.run([sys.executable, "-m", "dockalloc", *map(str, args)], cwd=cwd, env=env,
                          capture_output=True, check=True).stdout


def test_criterion_9_determinism(tmp_path):
    outputs = []
    for run, hashseed in (("a", 1), ("b", 2)):
        root = tmp_path / run
        corpus = root / "corpus"
        _cli(["gen", "--seed", 77, "--n", 3, "--u-max", 7, "--gamma-max", 5, "--count", 16,
              "--out", corpus], tmp_path, hashseed)
        files = {p.name: p.read_bytes() for p in sorted(corpus.iterdir())}
        solves = {name: _cli(["solve", corpus / name, "--json", "--trace"], tmp_path, hashseed)
                  for name in sorted(files)}
        _cli(["verify", corpus, "--lambda", 2, 4, "--out", root / "report.csv"], tmp_path, hashseed)
        outputs.append((files, solves, (root / "report.csv").read_bytes()))
    (fa, sa, ra), (fb, sb, rb) = outputs
    same_files, same_solves, same_csv = fa == fb, sa == sb, ra == rb
    ok = same_files and same_solves and same_csv and len(fa) == 16
    record(9, ok, f"two runs (different PYTHONHASHSEED): instance files identical {same_files}, "
                  f"solutions+traces identical {same_solves}, CSV identical {same_csv}")
    assert len(fa) == 16
    assert same_files and same_solves and same_csv
