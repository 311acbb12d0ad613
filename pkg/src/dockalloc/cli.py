"""``dockalloc`` command line: gen | solve | oracle | verify | diagnose | bench.

Exit codes: 0 success, 1 a verification check failed, 2 unreadable input or
bad arguments, 3 infeasible instance, 4 solver disagrees with the oracle,
5 oracle enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from fractions import Fraction
from pathlib import Path

from .errors import InfeasibleError, OracleCapExceeded, PreconditionError
from .generate import GenerationError, gen
from .io import InstanceFormatError, dumps_instance, load_instance, rat
from .model import objective
from .oracle import ProblemSpec, all_optima, brute_optimum
from .proxlab import MonoDecVerdict, ProximityLab
from .solver import solve_scaling
from .transform import derive_dr_prime, solve_relaxed

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_MISMATCH, EXIT_CAP = 0, 1, 2, 3, 4, 5


def fmt_rat(v: Fraction) -> str:
    return str(Fraction(v))


@dataclass(frozen=True)
class ReportRow:
    instance_id: str
    n: int | str = ""
    D: int | str = ""
    B: int | str = ""
    gamma: int | str = ""
    lam: int | str = ""
    dist_l1: int | str = ""
    dist_linf: int | str = ""
    bound: int | str = ""
    p_cases: str = ""
    q_cases: str = ""
    n_cases: str = ""
    table1_bound: int | str = ""
    passed: str = ""
    phases: int | str = ""
    gamma_steps: int | str = ""
    wall_ms: str = ""
    note: str = ""


CSV_HEADER = ["instance_id", "n", "D", "B", "gamma", "lambda", "dist_l1", "dist_linf", "bound",
              "p_cases", "q_cases", "n_cases", "table1_bound", "pass", "phases", "gamma_steps",
              "wall_ms", "note"]
assert len(CSV_HEADER) == len(fields(ReportRow))


def write_report(rows, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(astuple(r))


def verify_instance(path: str, instance_id: str, lams: tuple[int, ...], nu: int | None = None,
                    timing: bool = False, cap: int | None = None) -> list[ReportRow]:
    """One report row per ``lam`` for the instance file at ``path``."""
    try:
        inst = load_instance(path)
    except (InstanceFormatError, OSError) as exc:
        return [ReportRow(instance_id, lam=lam, passed="false", note=f"unreadable: {exc}") for lam in lams]
    common = dict(n=inst.n, D=inst.D, B=inst.B, gamma=inst.gamma)

    def skipped(reason):
        return [ReportRow(instance_id, **common, lam=lam, passed="skipped", note=reason) for lam in lams]

    t0 = time.perf_counter()
    try:
        _, trace = solve_scaling(inst)
    except InfeasibleError as exc:
        return skipped(f"infeasible: {exc}")
    if trace.short_circuited:
        return skipped("relaxed optimum within budget")
    try:
        lab = ProximityLab(inst, instance_id, cap)
    except OracleCapExceeded as exc:
        return skipped(f"oracle cap: {exc}")
    rows = []
    for lam in lams:
        try:
            rep = lab.report(lam)
            notes = []
            ok = rep.passed
            if not ok:
                notes.append("failed: " + ",".join(k for k, v in rep.flags().items() if not v))
            if nu is not None:
                worst, bound = lab.composed(lam, nu)
                notes.append(f"composed nu={nu}: {worst}<{bound}")
                ok = ok and worst < bound
        except OracleCapExceeded as exc:
            rows.append(ReportRow(instance_id, **common, lam=lam, passed="skipped", note=f"oracle cap: {exc}"))
            continue
        wall = f"{(time.perf_counter() - t0) * 1000:.1f}" if timing else ""
        label = rep.label
        rows.append(ReportRow(
            instance_id, **common, lam=lam, dist_l1=rep.dist_l1, dist_linf=rep.dist_linf,
            bound=rep.bound_l1, p_cases="|".join(label.p_cases), q_cases="|".join(label.q_cases),
            n_cases="|".join(label.n_cases),
            table1_bound="" if rep.table1_bound is None else rep.table1_bound,
            passed="true" if ok else "false", phases=trace.total_phases,
            gamma_steps=trace.gamma_steps, wall_ms=wall, note="; ".join(notes)))
    return rows


def _verify_job(args):
    return verify_instance(*args)


# -- commands -----------------------------------------------------------------


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    insts = gen(args.seed, args.n, args.u_max, args.gamma_max, args.family, args.count,
                Fraction(args.noise), args.retries)
    for k, inst in enumerate(insts):
        (out / f"inst_s{args.seed}_{k:04d}.json").write_text(dumps_instance(inst), encoding="utf-8")
    print(f"wrote {len(insts)} instances to {out}")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load_instance(args.file)
    a, trace = solve_scaling(inst)
    value = objective(inst, a)
    doc = {"objective": rat(value), "allocation": a.to_json()}
    if args.trace:
        doc["trace"] = trace.to_json()
    status = EXIT_OK
    if args.oracle_check:
        ov, _ = brute_optimum(ProblemSpec.dr(inst))
        doc["oracle_objective"] = rat(ov)
        if ov != value:
            status = EXIT_MISMATCH
    if args.json:
        print(json.dumps(doc, indent=2))
    else:
        print(f"objective: {fmt_rat(value)}")
        print(f"d: {list(a.d)}")
        print(f"b: {list(a.b)}")
        if args.trace:
            print("trace: " + json.dumps(trace.to_json(), indent=2))
        if args.oracle_check:
            print(f"oracle objective: {fmt_rat(Fraction(*doc['oracle_objective']))}"
                  + ("" if status == EXIT_OK else "  MISMATCH"))
    return status


def cmd_oracle(args) -> int:
    inst = load_instance(args.file)
    if args.problem == "DR":
        spec = ProblemSpec.dr(inst)
    elif args.problem == "relaxed":
        spec = ProblemSpec(inst, "relaxed")
    else:
        drp = derive_dr_prime(inst, solve_relaxed(inst), allow_within_budget=True)
        spec = ProblemSpec.dr_prime(drp, args.lam)
    opt = all_optima(spec)
    shown = opt.optima if args.all else opt.optima[:1]
    print(json.dumps({"problem": opt.problem, "optimal_value": rat(opt.optimal_value),
                      "count": len(opt.optima), "optima": [a.to_json() for a in shown]}, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise InstanceFormatError(f"{corpus} is not a directory")
    files = sorted(corpus.glob("*.json"))
    jobs = [(str(f), f.stem, tuple(args.lam), args.nu, args.timing) for f in files]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.workers) as ex:
            results = list(ex.map(_verify_job, jobs))
    else:
        results = [_verify_job(j) for j in jobs]
    rows = sorted((r for rs in results for r in rs), key=lambda r: (r.instance_id, r.lam))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_report(rows, fh)
    else:
        write_report(rows, sys.stdout)
    counts = {k: sum(r.passed == k for r in rows) for k in ("true", "false", "skipped")}
    print(f"verify: rows={len(rows)} pass={counts['true']} fail={counts['false']} "
          f"skipped={counts['skipped']}", file=sys.stdout if args.out else sys.stderr)
    return EXIT_CHECK if counts["false"] else EXIT_OK


def _verdict(ok: bool) -> str:
    return "ok" if ok else "FAIL"


def cmd_diagnose(args) -> int:
    inst = load_instance(args.file)
    relaxed = solve_relaxed(inst)
    if relaxed.satisfies_l1:
        print("relaxed optimum meets the l1 budget; nothing to diagnose")
        return EXIT_OK
    lab = ProximityLab(inst, Path(args.file).stem)
    lam = args.lam
    rep = lab.report(lam)
    drp = lab.drp
    print(f"instance {rep.instance_id}: n={inst.n} D={inst.D} B={inst.B} gamma={inst.gamma}")
    print(f"P={list(drp.P)} Q={list(drp.Q)} xi_P={drp.xi_P} xi_Q={drp.xi_Q} gamma_min={drp.gamma_min}")
    print(f"lambda={lam}: {len(rep.checks)} optima of DR'({lam}), "
          f"{len(lab.optima(1).optima)} optima of DR'")
    for k, c in enumerate(rep.checks):
        print(f"-- optimum {k}: d={list(c.a.d)} b={list(c.a.b)}")
        print(f"   anchor: d*={list(c.anchor.d)} b*={list(c.anchor.b)}  ||x-x*||_1={c.anchor_l1}")
        print("   I-sets: " + ", ".join(f"I{t}={sorted(c.isets[t])}" for t in range(1, 7)))
        print(f"   cases: P={list(c.label.p_cases)} Q={list(c.label.q_cases)} N={list(c.label.n_cases)}")
        print(f"   Table 1 bound: {c.case_bounds.applied_bound}  "
              f"forbidden: {list(c.case_bounds.forbidden) or 'none'}  {_verdict(c.case_bounds.ok)}")
        print(f"   emptiness lemmas: {_verdict(not c.emptiness)}" + "".join(f"\n     {e}" for e in c.emptiness))
        mono: dict[str, MonoDecVerdict] = c.mono_dec
        print("   strict decrease: " + ", ".join(
            f"({cl}) {v.tuples_checked} tuples {_verdict(v.ok)}" for cl, v in mono.items()))
        print(f"   x(P)<=xi_P=x*(P), x(Q)>=xi_Q=x*(Q): {_verdict(c.eq2_ok)}")
    print(f"proximity: l1 {rep.dist_l1} < {rep.bound_l1} {_verdict(rep.theorem_ok)}; "
          f"linf {rep.dist_linf} < {rep.bound_linf} {_verdict(rep.corollary_ok)}")
    print("overall: " + ("pass" if rep.passed else "FAIL"))
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_bench(args) -> int:
    if args.corpus:
        files = sorted(Path(args.corpus).glob("*.json"))
        items = [(f.stem, load_instance(f)) for f in files]
    else:
        insts = gen(args.seed, args.n, args.u_max, args.gamma_max, args.family, args.count)
        items = [(f"s{args.seed}_{k:04d}", inst) for k, inst in enumerate(insts)]
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["instance_id", "n", "D", "B", "gamma", "objective", "phases", "gamma_steps",
                "oracle_match", "wall_ms"])
    mismatches = 0
    for name, inst in items:
        t0 = time.perf_counter()
        try:
            a, trace = solve_scaling(inst)
        except InfeasibleError:
            w.writerow([name, inst.n, inst.D, inst.B, inst.gamma, "infeasible", "", "", "", ""])
            continue
        wall = (time.perf_counter() - t0) * 1000
        value = objective(inst, a)
        match = ""
        if args.oracle:
            match = "true" if brute_optimum(ProblemSpec.dr(inst))[0] == value else "false"
            mismatches += match == "false"
        w.writerow([name, inst.n, inst.D, inst.B, inst.gamma, fmt_rat(value), trace.total_phases,
                    trace.gamma_steps, match, f"{wall:.2f}"])
    return EXIT_MISMATCH if mismatches else EXIT_OK


# -- parser -------------------------------------------------------------------


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dockalloc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate random instance files")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--n", type=_positive, required=True)
    g.add_argument("--u-max", type=_positive, required=True)
    g.add_argument("--gamma-max", type=int, required=True)
    g.add_argument("--family", choices=["separable_convex", "table", "mixed"], default="mixed")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--noise", default="0", help="table noise amplitude (exact rational string)")
    g.add_argument("--retries", type=_positive, default=200)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one instance with the scaling algorithm")
    s.add_argument("file")
    s.add_argument("--oracle-check", action="store_true", help="compare with brute force")
    s.add_argument("--trace", action="store_true", help="print the phase trace")
    s.add_argument("--json", action="store_true", help="machine-readable output")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="brute-force optima")
    o.add_argument("file")
    o.add_argument("--problem", choices=["DR", "relaxed", "DR'"], default="DR")
    o.add_argument("--lambda", dest="lam", type=_positive, default=1)
    o.add_argument("--all", action="store_true", help="list every optimum")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", help="proximity checks over a corpus directory")
    v.add_argument("corpus")
    v.add_argument("--lambda", dest="lam", type=_positive, nargs="+", default=[2, 4])
    v.add_argument("--nu", type=_positive, default=None, help="also check the composed (lambda, nu) bound")
    v.add_argument("--out", default=None, help="CSV path (default stdout)")
    v.add_argument("--timing", action="store_true", help="fill wall_ms (makes output nondeterministic)")
    v.add_argument("--workers", type=_positive, default=1)
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("diagnose", help="human-readable case analysis for one instance")
    d.add_argument("file")
    d.add_argument("--lambda", dest="lam", type=_positive, default=2)
    d.set_defaults(func=cmd_diagnose)

    b = sub.add_parser("bench", help="time the solver over a corpus or fresh instances")
    b.add_argument("--corpus", default=None)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--n", type=_positive, default=4)
    b.add_argument("--u-max", type=_positive, default=8)
    b.add_argument("--gamma-max", type=int, default=6)
    b.add_argument("--family", choices=["separable_convex", "table", "mixed"], default="mixed")
    b.add_argument("--count", type=int, default=20)
    b.add_argument("--oracle", action="store_true", help="also check against brute force")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        import logging
        logging.basicConfig(level=logging.DEBUG, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InstanceFormatError, OSError, GenerationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InfeasibleError as exc:
        print(f"infeasible: {exc} [{exc.certificate}]", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OracleCapExceeded as exc:
        print(f"error: {exc}; raise DOCKALLOC_ORACLE_CAP to allow it", file=sys.stderr)
        return EXIT_CAP
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
