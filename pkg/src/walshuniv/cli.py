"""Command-line entry points for every construction and verification.

Each command writes a JSON report (and CSV tables where applicable) into
the output directory and exits 0 iff all required assertions pass.
Fractions on the command line are written "p/q".
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

import numpy as np

from .cascade import ScheduleInfeasible, build_cascade, choose_schedule
from .cascade_verify import verify_cascade
from .config import RunConfig
from .exactnum import QS2
from .flatpoly import build_flat_poly
from .geometry import DyadicInterval, StepFunction, step_from_json
from .reports import Report, write_csv
from .stepapprox import build_step_approx, verify_step_approx
from .universal import (SearchExhausted, approximate, build_universal,
                        convergence_report, verify_universal)
from .walsh import (block_kernel, fwht_analysis, fwht_analysis_float,
                    fwht_synthesis, fwht_synthesis_float, walsh_eval)
from .weight import build_weight, verify_weight


def _frac(s: str) -> Fraction:
    return Fraction(s)


def _ensure_outdir(cfg: RunConfig) -> str:
    out = cfg.resolved_outdir()
    os.makedirs(out, exist_ok=True)
    return out


def _emit(report: Report, cfg: RunConfig, name: str) -> int:
    out = _ensure_outdir(cfg)
    path = os.path.join(out, f"{name}.json")
    with open(path, "w") as fh:
        fh.write(report.to_json())
    print(report.summary())
    print(f"report: {path}")
    return 0 if report.passed else 1


def cmd_verify_walsh(args, cfg: RunConfig) -> int:
    report = Report(title="walsh kernel identities", mode="exact",
                    meta={"max_m": args.max_m, "exact_j": args.exact_j})
    ok = True
    for m in range(1, args.max_m + 1):
        full = block_kernel(m, "full")
        upper = block_kernel(m, "upper_half")
        n = 1 << (m + 1)
        for i in range(n):
            x = Fraction(i, n)
            if full.value_at(x) != QS2(sum(walsh_eval(k, x) for k in range(1 << m))):
                ok = False
            if upper.value_at(x) != QS2(sum(walsh_eval(k, x)
                                            for k in range(1 << m, 1 << (m + 1)))):
                ok = False
    report.add("block-kernels", ok, "exact",
               detail=f"closed forms match summation for m <= {args.max_m} "
                      "at every grid point")
    J = args.exact_j
    vals = [QS2(Fraction((13 * i * i + 7 * i + 1) % 29 - 14, 8))
            for i in range(1 << J)]
    rt = fwht_synthesis(fwht_analysis(vals)) == vals
    report.add("exact-roundtrip", rt, "exact",
               detail=f"analysis/synthesis identity at J = {J}")
    rng = np.random.default_rng(cfg.seed)
    v = rng.standard_normal(1 << args.float_j)
    t0 = time.perf_counter()
    back = fwht_synthesis_float(fwht_analysis_float(v))
    dt = time.perf_counter() - t0
    err = float(np.max(np.abs(back - v)))
    report.add("float-roundtrip", err <= 1e-12 and dt < 1.0, "exact",
               claimed="<= 1e-12, < 1 s",
               computed=f"max err {err:.3e} in {dt:.3f} s (float path, "
                        "benchmarks only)")
    return _emit(report, cfg, "verify-walsh")


def cmd_verify_lemma1(args, cfg: RunConfig) -> int:
    report = Report(title="flat polynomial properties", mode="exact",
                    meta={"K": args.K, "M": args.M})
    ls = range(1 << args.K) if args.all_l else [args.l]
    ok_all = True
    for l in ls:
        delta = DyadicInterval(args.K, l)
        atom = build_flat_poly(delta, args.M)
        J = args.M + 1
        n = 1 << J
        coeffs = fwht_analysis([QS2(atom.eval(Fraction(i, n))) for i in range(n)])
        from .exactnum import half_power
        mag = half_power(args.M + args.K)
        ok = all(abs(coeffs[k]) == mag for k in range(1 << args.M, 1 << (args.M + 1)))
        ok &= all(coeffs[k] == QS2(0) for k in range(1 << args.M))
        minus, plus = atom.minus_set(), atom.plus_set()
        ok &= minus.measure == delta.measure / 2
        ok &= plus.measure == delta.measure / 2
        ok &= all(atom.eval(Fraction(i, n)) == 0 for i in range(n)
                  if not delta.contains_point(Fraction(i, n)))
        ok_all &= ok
    report.add("four-properties", ok_all, "exact",
               detail="flat block magnitudes 2^(-(M+K)/2), half-measure "
                      "value sets, zero off the interval; exact transform")
    return _emit(report, cfg, "verify-lemma1")


def cmd_verify_lemma2(args, cfg: RunConfig) -> int:
    delta = DyadicInterval(args.delta_K, args.delta_l)
    try:
        sched = choose_schedule(args.n0, delta, args.eps, args.gamma, args.q,
                                mode=args.mode,
                                index_bit_cap=cfg.index_bit_cap,
                                count_cap=cfg.toy_count_cap if args.mode == "toy"
                                else 1 << 21)
    except ScheduleInfeasible as e:
        report = Report(title="cascade statements", mode=args.mode,
                        meta={"infeasible": str(e),
                              "round": e.round_nu,
                              "estimated_count": str(e.estimated_count),
                              "estimated_max_level": e.estimated_max_level})
        report.add("schedule-feasibility", bool(args.expect_infeasible),
                   "exact",
                   computed=f"infeasible at round {e.round_nu}",
                   detail=str(e))
        return _emit(report, cfg, "verify-lemma2")
    pair = build_cascade(sched)
    report = verify_cascade(pair, seed=cfg.seed,
                            atom_budget=cfg.atom_piece_budget,
                            dense_level_cap=cfg.dense_check_max_level)
    if args.expect_infeasible:
        report.add("schedule-feasibility", False, "exact",
                   computed="feasible", detail="expected infeasibility")
    return _emit(report, cfg, "verify-lemma2")


def cmd_verify_lemma3(args, cfg: RunConfig) -> int:
    values = [Fraction(v) for v in args.pieces.split(",")]
    n = len(values)
    L = n.bit_length() - 1
    if 1 << L != n:
        print("piece count must be a power of two", file=sys.stderr)
        return 2
    f = StepFunction([(DyadicInterval(L, i), QS2(v))
                      for i, v in enumerate(values)])
    try:
        sa = build_step_approx(f, args.eps, args.n0, mode=args.mode,
                               q_default=args.q,
                               index_bit_cap=cfg.index_bit_cap,
                               count_cap=cfg.toy_count_cap if args.mode == "toy"
                               else 1 << 21)
    except ScheduleInfeasible as e:
        report = Report(title="step-function approximation", mode=args.mode,
                        meta={"infeasible": str(e)})
        report.add("schedule-feasibility", False, "exact", detail=str(e))
        return _emit(report, cfg, "verify-lemma3")
    report = verify_step_approx(sa, seed=cfg.seed, n_subsets=args.subsets)
    return _emit(report, cfg, "verify-lemma3")


def cmd_build_weight(args, cfg: RunConfig) -> int:
    w = build_weight(args.delta, args.stages, n0=args.n0,
                     level_budget=cfg.enum_level_budget,
                     count_cap=cfg.toy_count_cap)
    report = verify_weight(w)
    out = _ensure_outdir(cfg)
    with open(os.path.join(out, "weight.json"), "w") as fh:
        json.dump(w.to_json(), fh, indent=2, sort_keys=True)
    print(f"weight: {os.path.join(out, 'weight.json')}")
    return _emit(report, cfg, "build-weight")


def cmd_build_universal(args, cfg: RunConfig) -> int:
    g = build_universal(args.delta, args.stages, n0=args.n0,
                        p0_shift=args.p0_shift, count_cap=cfg.toy_count_cap)
    report = verify_universal(g)
    out = _ensure_outdir(cfg)
    blob = g.weight.to_json()
    blob["p0_shift"] = g.p0_shift
    blob["p0_coefficients"] = [str(g.p0_coefficient(k))
                               for k in range(1 << g.n0)]
    with open(os.path.join(out, "universal.json"), "w") as fh:
        json.dump(blob, fh, indent=2, sort_keys=True)
    print(f"universal: {os.path.join(out, 'universal.json')}")
    return _emit(report, cfg, "build-universal")


def cmd_approximate(args, cfg: RunConfig) -> int:
    with open(args.target) as fh:
        f = step_from_json(json.load(fh))
    g = build_universal(args.delta, args.stages, n0=args.n0,
                        p0_shift=args.p0_shift, count_cap=cfg.toy_count_cap)
    out = _ensure_outdir(cfg)
    try:
        sel = approximate(g, f, Q=args.depth,
                          search_budget=args.budget,
                          tolerant=not args.strict)
    except (SearchExhausted, RuntimeError) as e:
        report = Report(title="sign selection", mode="toy",
                        meta={"error": str(e)})
        report.add("selection", False, "exact", detail=str(e))
        return _emit(report, cfg, "approximate")
    csvtext, data = convergence_report(sel, g)
    with open(os.path.join(out, "convergence.csv"), "w") as fh:
        fh.write(csvtext)
    with open(os.path.join(out, "selection.json"), "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
    print(csvtext)
    print(f"artifacts: {out}/convergence.csv, {out}/selection.json")
    report = Report(title="sign selection", mode="toy", meta=data["meta"])
    report.add("depth-reached", len(sel.rows) == args.depth, "exact",
               computed=str(len(sel.rows)))
    dec = sel.errors_strictly_decreasing()
    report.add("errors-strictly-decreasing",
               dec if dec is not None else None,
               "enclosure", computed=str(dec),
               detail="True/False when the error enclosures decide it")
    return _emit(report, cfg, "approximate")


def cmd_bench_fwht(args, cfg: RunConfig) -> int:
    out = _ensure_outdir(cfg)
    rows = []
    rng = np.random.default_rng(cfg.seed)
    for J in args.js:
        v = rng.standard_normal(1 << J)
        t0 = time.perf_counter_ns()
        for _ in range(args.reps):
            fwht_analysis_float(v)
        dt = (time.perf_counter_ns() - t0) // args.reps
        rows.append([J, "float", dt])
        if J <= 12:
            vq = [QS2(Fraction(int(x * 64), 64)) for x in v[:1 << J]]
            t0 = time.perf_counter_ns()
            fwht_analysis(vq)
            rows.append([J, "exact", time.perf_counter_ns() - t0])
    path = os.path.join(out, "bench-fwht.csv")
    write_csv(path, ["J", "path", "nanos_per_transform"], rows)
    print(f"bench: {path}")
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="walshuniv",
                                 description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--outdir", help="output directory override")
    common.add_argument("--seed", type=int, help="seed override")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-walsh", parents=[common])
    p.add_argument("--max-m", type=int, default=8)
    p.add_argument("--exact-j", type=int, default=12)
    p.add_argument("--float-j", type=int, default=20)
    p.set_defaults(func=cmd_verify_walsh)

    p = sub.add_parser("verify-lemma1", parents=[common])
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--all-l", action="store_true")
    p.set_defaults(func=cmd_verify_lemma1)

    p = sub.add_parser("verify-lemma2", parents=[common])
    p.add_argument("--eps", type=_frac, default=Fraction(9, 10))
    p.add_argument("--gamma", type=_frac, default=Fraction(1))
    p.add_argument("--delta-l", type=int, default=0)
    p.add_argument("--delta-K", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--n0", type=int, default=1)
    p.add_argument("--mode", choices=["paper", "toy"], default="paper")
    p.add_argument("--expect-infeasible", action="store_true")
    p.set_defaults(func=cmd_verify_lemma2)

    p = sub.add_parser("verify-lemma3", parents=[common])
    p.add_argument("--pieces", required=True,
                   help="comma-separated values on a uniform grid")
    p.add_argument("--eps", type=_frac, default=Fraction(1, 2))
    p.add_argument("--n0", type=int, default=1)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--mode", choices=["paper", "toy"], default="paper")
    p.add_argument("--subsets", type=int, default=50)
    p.set_defaults(func=cmd_verify_lemma3)

    p = sub.add_parser("build-weight", parents=[common])
    p.add_argument("--delta", type=_frac, default=Fraction(1, 4))
    p.add_argument("--stages", type=int, default=6)
    p.add_argument("--n0", type=int, default=4)
    p.set_defaults(func=cmd_build_weight)

    p = sub.add_parser("build-universal", parents=[common])
    p.add_argument("--delta", type=_frac, default=Fraction(1, 4))
    p.add_argument("--stages", type=int, default=6)
    p.add_argument("--n0", type=int, default=4)
    p.add_argument("--p0-shift", type=int, default=0)
    p.set_defaults(func=cmd_build_universal)

    p = sub.add_parser("approximate", parents=[common])
    p.add_argument("--target", required=True, help="step-function JSON file")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--delta", type=_frac, default=Fraction(1, 4))
    p.add_argument("--stages", type=int, default=6)
    p.add_argument("--n0", type=int, default=4)
    p.add_argument("--p0-shift", type=int, default=0)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("bench-fwht", parents=[common])
    p.add_argument("--js", type=int, nargs="+", default=[8, 12, 16, 20])
    p.add_argument("--reps", type=int, default=3)
    p.set_defaults(func=cmd_bench_fwht)

    args = ap.parse_args(argv)
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.outdir:
        cfg.outdir = args.outdir
    if args.seed is not None:
        cfg.seed = args.seed
    return args.func(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
