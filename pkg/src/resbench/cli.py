"""Command-line interface: monotones, overlap programs, fidelity bounds,
golden-state search, yields, the channel oracle, and validation suites.

Every command prints one JSON record per line to stdout. Exit codes:
0 success, 2 argument/input parse errors, 3 solver failures, 4 oracle
requested for a non-affine theory.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from . import linalg as la
from .channels import max_fidelity_channel
from .conic import SolverError
from .distill import (distillation_yield, fidelity_bounds, fidelity_max_golden,
                      g_affine, g_value, golden_search, golden_state)
from .io import ResultRecord, file_digest, load_density, load_pure, load_theory, vector_to_json
from .monotones import r_max, r_max_affine, r_min, r_std
from .validate import run_suites
from .io import _encode

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_ORACLE_UNSUPPORTED = 4


def _emit(record: ResultRecord) -> None:
    sys.stdout.write(record.to_json() + "\n")


def _timing(start: float, args) -> int | None:
    if getattr(args, "no_timing", False):
        return None
    return int(round((time.perf_counter() - start) * 1000))


def _inputs(args) -> dict:
    out = {}
    for key in ("state", "theory", "target"):
        path = getattr(args, key, None)
        if path and path != "golden":
            out[key] = file_digest(path)
    return out


def cmd_monotone(args) -> int:
    start = time.perf_counter()
    rho = load_density(args.state)
    theory = load_theory(args.theory)
    fn = {"rmax": r_max, "rstd": r_std, "rmin": r_min, "rmax-affine": r_max_affine}[args.measure]
    res = fn(rho, theory, tol=args.solver_tol)
    values = {"value": res.value, "log_value": res.log_value}
    rec = ResultRecord(command=f"monotone:{args.measure}", inputs=_inputs(args),
                       values=values, status="infinite" if res.infinite else "ok",
                       gap=0.0 if res.infinite else res.gap,
                       witness=res.witness if args.witness else None,
                       timing_ms=_timing(start, args))
    _emit(rec)
    return EXIT_OK


def cmd_gvalue(args) -> int:
    start = time.perf_counter()
    rho = load_density(args.state)
    theory = load_theory(args.theory)
    fn = g_affine if args.affine else g_value
    res = fn(rho, args.k, theory, tol=args.solver_tol)
    rec = ResultRecord(command="gvalue", inputs=_inputs(args),
                       values={"k": res.k, "value": res.value, "affine": res.affine},
                       status=res.status, gap=0.0,
                       witness=res.witness if args.witness else None,
                       timing_ms=_timing(start, args))
    _emit(rec)
    return EXIT_OK


def cmd_fidelity(args) -> int:
    start = time.perf_counter()
    rho = load_density(args.state)
    theory = load_theory(args.theory)
    if args.oracle and not theory.is_affine:
        print("error: the channel oracle supports affine theories only", file=sys.stderr)
        return EXIT_ORACLE_UNSUPPORTED
    if args.target == "golden":
        report = fidelity_max_golden(rho, theory, tol=args.tol, solver_tol=args.solver_tol)
        phi = report.target
    else:
        phi = load_pure(args.target)
        report = fidelity_bounds(rho, phi, theory, tol=args.tol, solver_tol=args.solver_tol)
    values = {"upper": report.upper, "lower": report.lower, "exact": report.exact,
              "mechanism": report.mechanism, "flags": report.condition_flags}
    if args.oracle:
        oracle_value, _ = max_fidelity_channel(rho, phi, theory, tol=args.solver_tol)
        values["oracle"] = oracle_value
    rec = ResultRecord(command="fidelity", inputs=_inputs(args), values=values,
                       status="ok", gap=abs(report.upper - report.lower),
                       timing_ms=_timing(start, args))
    _emit(rec)
    return EXIT_OK


def cmd_golden(args) -> int:
    start = time.perf_counter()
    theory = load_theory(args.theory)
    if args.search or theory.golden_analytic is None:
        cert = golden_search(theory, restarts=args.restarts, seed=args.seed,
                             solver_tol=args.solver_tol)
    else:
        from .distill import golden_certificate
        cert = golden_certificate(theory, solver_tol=args.solver_tol)
    values = {"state": vector_to_json(cert.state), "r_min": cert.r_min,
              "r_max": cert.r_max, "matched": cert.matched}
    rec = ResultRecord(command="golden", inputs=_inputs(args), values=values,
                       status="ok" if cert.matched else "unmatched",
                       gap=abs(cert.r_min - cert.r_max), timing_ms=_timing(start, args))
    _emit(rec)
    return EXIT_OK


def cmd_yield(args) -> int:
    start = time.perf_counter()
    rho = load_density(args.state)
    theory = load_theory(args.theory)
    res = distillation_yield(rho, args.epsilon, theory, solver_tol=args.solver_tol)
    rec = ResultRecord(command="yield", inputs=_inputs(args),
                       values={"epsilon": args.epsilon, **res}, status="ok", gap=0.0,
                       timing_ms=_timing(start, args))
    _emit(rec)
    return EXIT_OK


def cmd_oracle(args) -> int:
    start = time.perf_counter()
    rho = load_density(args.state)
    theory = load_theory(args.theory)
    if not theory.is_affine:
        print("error: the channel oracle supports affine theories only", file=sys.stderr)
        return EXIT_ORACLE_UNSUPPORTED
    phi = golden_state(theory) if args.target == "golden" else load_pure(args.target)
    value, _ = max_fidelity_channel(rho, phi, theory, tol=args.solver_tol)
    rec = ResultRecord(command="oracle", inputs=_inputs(args), values={"value": value},
                       status="ok", gap=0.0, timing_ms=_timing(start, args))
    _emit(rec)
    return EXIT_OK


def cmd_validate(args) -> int:
    threads = int(os.environ.get("RESBENCH_THREADS", "1"))
    checks = run_suites([args.suite], seed=args.seed, solver_tol=args.solver_tol,
                        threads=max(1, threads))
    failed = [c for c in checks if not c.passed]
    for c in checks:
        sys.stdout.write(_encode(c.as_dict()) + "\n")
    summary = {"summary": True, "suite": args.suite, "checks": len(checks),
               "failed": len(failed), "pass": not failed}
    sys.stdout.write(_encode(summary) + "\n")
    if failed:
        first = failed[0]
        print(f"error: first failing check: {first.suite}/{first.name} "
              f"(value {first.value}, expected {first.expected}, tol {first.tol})",
              file=sys.stderr)
        return 1
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resbench",
        description="Resource-theory monotones and one-shot distillation benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, state=True, theory=True):
        if state:
            p.add_argument("--state", required=True, help="state JSON file")
        if theory:
            p.add_argument("--theory", required=True, help="theory JSON file")
        p.add_argument("--tol", type=float, default=1e-6,
                       help="assertion tolerance for exactness flags")
        p.add_argument("--solver-tol", type=float, default=1e-8,
                       help="interior-point solver tolerance")
        p.add_argument("--no-timing", action="store_true",
                       help="omit the timing field (for reproducible output)")

    p = sub.add_parser("monotone", help="compute a robustness monotone")
    p.add_argument("--measure", required=True, choices=["rmax", "rstd", "rmin", "rmax-affine"])
    common(p)
    p.add_argument("--witness", action="store_true", help="include the dual witness")
    p.set_defaults(fn=cmd_monotone)

    p = sub.add_parser("gvalue", help="evaluate the overlap program G(rho; k)")
    common(p)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--affine", action="store_true", help="use the affine-polar variant")
    p.add_argument("--witness", action="store_true")
    p.set_defaults(fn=cmd_gvalue)

    p = sub.add_parser("fidelity", help="distillation-fidelity bounds")
    common(p)
    p.add_argument("--target", default="golden",
                   help="target pure-state file, or 'golden' for the maximal state")
    p.add_argument("--oracle", action="store_true",
                   help="also solve the channel oracle (affine theories only)")
    p.set_defaults(fn=cmd_fidelity)

    p = sub.add_parser("golden", help="golden-state search and certification")
    common(p, state=False)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--search", action="store_true",
                   help="force the search even when an analytic state exists")
    p.set_defaults(fn=cmd_golden)

    p = sub.add_parser("yield", help="one-shot distillation yield bounds")
    common(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.set_defaults(fn=cmd_yield)

    p = sub.add_parser("oracle", help="free-channel fidelity oracle")
    common(p)
    p.add_argument("--target", default="golden")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("validate", help="run a named validation suite")
    p.add_argument("--suite", required=True,
                   choices=["all", "golden", "affine-exact", "appendixB", "appendixC",
                            "appendixD", "appendixE", "nogo", "yield"])
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--solver-tol", type=float, default=1e-8)
    p.add_argument("--no-timing", action="store_true")
    p.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SolverError as exc:
        print(f"error: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
