"""Command-line front end: eigen / trace / verify pipelines with CSV, JSON, SVG output.

Exit codes: 0 success (all checks pass), 1 verification failure (a theorem
predicate failed on the traced branch), 2 numerical failure, 3 invalid input.
Runs are randomness-free; identical configurations produce byte-identical
artifacts.  HB_THREADS caps internal parallelism of branch tracing.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .branch import (
    Branch,
    VerificationReport,
    predicted_interval,
    trace_branch,
    verify_predictions,
)
from .core import ProblemSpec, classify_limits
from .errors import (
    HessbifError,
    InvalidInputError,
    NumericalFailureError,
    OutOfTableError,
    TracingFailureError,
)
from .plotting import render_branches_svg
from .shooting import ShootingConfig, first_eigenvalue
from .system import (
    SystemSpec,
    power_pair_constant,
    system_apriori_monitor,
    system_eigenvalue,
    trace_system_branch,
)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_NUMERICAL = 2
EXIT_INVALID = 3

EIGEN_FLATNESS_TOL = 1e-6


def _write_json(obj, path) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config_from_args(args) -> ShootingConfig:
    return ShootingConfig(
        grid_points=args.grid_points,
        integrator_tol=args.tol,
        root_tol=args.root_tol,
    )


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("HB_THREADS", "")
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise InvalidInputError(f"HB_THREADS must be an integer, got {env!r}")


def _print_report(rep: VerificationReport, out=sys.stdout) -> None:
    for c in rep.checks:
        status = "PASS" if c.passed else "FAIL"
        out.write(f"[{status}] {c.name}: predicted {c.predicted}, observed {c.observed}\n")
    for note in rep.notes:
        out.write(f"note: {note}\n")
    out.write(f"overall: {'PASS' if rep.passed else 'FAIL'}\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_eigen(args) -> int:
    cfg = _config_from_args(args)
    res = first_eigenvalue(args.N, args.k, args.R, cfg)
    coupled = system_eigenvalue(args.N, args.k, args.R, cfg) if args.coupled else None
    print(f"lambda1({args.N},{args.k},R={args.R:g}) = {res.lambda1:.17g}")
    if coupled is not None:
        print(f"lambda0 (coupled) = {coupled:.17g}")
    if args.out:
        obj = {"schema_version": 1, "N": args.N, "k": args.k, "R": args.R,
               "lambda1": res.lambda1, "residual": res.residual,
               "iterations": res.iterations}
        if coupled is not None:
            obj["lambda0"] = coupled
            obj["note"] = "lambda0 computed by symmetric reduction and confirmed asymmetrically; equal to lambda1 on balls"
        _write_json(obj, args.out)
    return EXIT_OK


def _load_scalar_spec(path) -> ProblemSpec:
    spec = ProblemSpec.load(path)
    # numeric classification must agree with any declared classes
    classify_limits(spec.f)
    return spec


def cmd_trace(args) -> int:
    spec = _load_scalar_spec(args.spec)
    cfg = _config_from_args(args)
    branch = trace_branch(spec, args.d_min, args.d_max, args.n_points, cfg,
                          threads=_threads(args))
    branch.to_csv(args.out_branch)
    print(f"traced {len(branch.points)} points "
          f"({len(branch.folds)} folds, {len(branch.gaps)} gaps) -> {args.out_branch}")
    return EXIT_OK


def _eigen_case_report(branch: Branch, lam_target: float) -> VerificationReport:
    rep = VerificationReport(notes=[
        "out of table: equal finite limits at both ends (eigenvalue case)",
        "scope: radial shooting branches on a ball",
    ])
    lams = branch.lam_values()
    worst = max(abs(l - lam_target) for l in lams)
    rep.add("eigen-branch flatness", f"|lambda - {lam_target:.10g}| < {EIGEN_FLATNESS_TOL}",
            f"max deviation = {worst:.3e}", worst < EIGEN_FLATNESS_TOL,
            EIGEN_FLATNESS_TOL)
    return rep


def cmd_verify(args) -> int:
    spec = _load_scalar_spec(args.spec)
    cfg = _config_from_args(args)
    lam1 = first_eigenvalue(spec.N, spec.k, spec.R, cfg).lambda1
    branch = trace_branch(spec, args.d_min, args.d_max, args.n_points, cfg,
                          lambda_scale=lam1, threads=_threads(args))
    if args.out_branch:
        branch.to_csv(args.out_branch)
    try:
        pred = predicted_interval(spec.f.declared_f0, spec.f.declared_finf, lam1)
    except OutOfTableError:
        rep = _eigen_case_report(branch, spec.f.declared_f0.ratio_under(lam1))
    else:
        rep = verify_predictions(branch, pred, args.samples)
    _print_report(rep)
    if args.out_report:
        _write_json(rep.to_json(), args.out_report)
    return EXIT_OK if rep.passed else EXIT_VERIFY_FAILED


def cmd_system_trace(args) -> int:
    spec = SystemSpec.from_json(_read_json(args.spec))
    cfg = _config_from_args(args)
    grid = np.geomspace(args.d_min, args.d_max, args.n_points)
    sys_branch = trace_system_branch(spec, grid, cfg)
    sys_branch.to_csv(args.out_branch)
    print(f"traced {len(sys_branch.points)} system points "
          f"({len(sys_branch.branch.folds)} folds, {len(sys_branch.gaps)} gaps) "
          f"-> {args.out_branch}")
    return EXIT_OK


def cmd_system_verify(args) -> int:
    spec = SystemSpec.from_json(_read_json(args.spec))
    cfg = _config_from_args(args)
    lam1 = first_eigenvalue(spec.N, spec.k, spec.R, cfg).lambda1
    grid = np.geomspace(args.d_min, args.d_max, args.n_points)
    sys_branch = trace_system_branch(spec, grid, cfg, lambda_scale=lam1)
    if args.out_branch:
        sys_branch.to_csv(args.out_branch)

    monitor = system_apriori_monitor(sys_branch, spec, lam1, cfg)
    if not spec.matched_classes:
        rep = VerificationReport(notes=[
            "component classes mismatch (g and h): theorem verification skipped, monitors only",
            "scope: radial shooting branches on a ball",
        ])
        rep.checks.extend(monitor.checks)
        rep.notes.extend(n for n in monitor.notes if "scope" not in n)
    else:
        try:
            pred = predicted_interval(spec.mu, spec.nu, lam1)
        except OutOfTableError:
            rep = _eigen_case_report(sys_branch.branch, spec.mu.ratio_under(lam1))
        else:
            rep = verify_predictions(sys_branch.branch, pred, args.samples)
        rep.checks.extend(monitor.checks)
        rep.notes.extend(n for n in monitor.notes if "scope" not in n)
        rep.notes.append(
            "coupled eigenvalue lambda0 equals scalar lambda1 on balls (symmetric reduction)")
    _print_report(rep)
    if args.out_report:
        _write_json(rep.to_json(), args.out_report)
    return EXIT_OK if rep.passed else EXIT_VERIFY_FAILED


def cmd_power_pair(args) -> int:
    cfg = _config_from_args(args)
    res = power_pair_constant(args.N, args.k, args.alpha, args.beta, args.R,
                              args.samples, cfg, mu_lo=args.mu_lo, mu_hi=args.mu_hi)
    print(f"lambda * mu^(alpha/k) = {res.constant:.17g} "
          f"(max relative deviation {res.max_rel_deviation:.3e} "
          f"over {len(res.samples)} samples)")
    if args.out:
        _write_json({
            "schema_version": 1, "N": args.N, "k": args.k,
            "alpha": args.alpha, "beta": args.beta, "R": args.R,
            "constant": res.constant,
            "max_rel_deviation": res.max_rel_deviation,
            "samples": [{"lambda": lam, "mu": mu} for lam, mu in res.samples],
            "note": "constant existence/constancy verified; no closed form is claimed",
        }, args.out)
    return EXIT_OK


def cmd_plot(args) -> int:
    branches = []
    for path in args.branch:
        label = os.path.splitext(os.path.basename(path))[0] if len(args.branch) > 1 else ""
        branches.append((label, Branch.from_csv(path)))
    interval = None
    if args.interval:
        parts = args.interval.split(",")
        if len(parts) != 2:
            raise InvalidInputError(f"--interval must be 'lo,hi', got {args.interval!r}")
        try:
            interval = (float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise InvalidInputError(f"bad --interval: {exc}") from exc
    render_branches_svg(branches, args.out, interval=interval, title=args.title)
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_sweep_k(args) -> int:
    spec = _load_scalar_spec(args.spec)
    cfg = _config_from_args(args)
    rows = []
    print("exploratory sweep over Hessian order k (no acceptance claims):")
    for k in range(1, spec.N + 1):
        kspec = ProblemSpec(N=spec.N, k=k, R=spec.R, f=spec.f)
        try:
            branch = trace_branch(kspec, args.d_min, args.d_max, args.n_points, cfg,
                                  threads=_threads(args))
        except (NumericalFailureError, TracingFailureError) as exc:
            print(f"  k={k}: trace failed ({exc})")
            rows.append((k, math.nan, "failed"))
            continue
        minima = [f.lam for f in branch.folds if f.kind == "min"]
        lam_low = min(minima) if minima else math.nan
        desc = (f"radial lambda_* = {lam_low:.10g}" if minima
                else "no interior minimum detected")
        print(f"  k={k}: {len(branch.folds)} folds; {desc}")
        rows.append((k, lam_low, desc))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write("k,lambda_star_min,comment\n")
            for k, lam_low, desc in rows:
                fh.write(f"{k},{lam_low:.17g},{desc}\n")
    return EXIT_OK


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_cfg_args(p):
    p.add_argument("--grid-points", type=int, default=1024,
                   help="output grid size for stored profiles (default 1024)")
    p.add_argument("--tol", type=float, default=1e-10,
                   help="integrator relative tolerance (default 1e-10)")
    p.add_argument("--root-tol", type=float, default=1e-10,
                   help="root-finding relative tolerance (default 1e-10)")


def _add_trace_args(p):
    p.add_argument("--d-min", type=float, default=1e-2)
    p.add_argument("--d-max", type=float, default=1e2)
    p.add_argument("--n-points", type=int, default=25)
    p.add_argument("--threads", type=int, default=None,
                   help="parallel grid-point evaluation (default HB_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hessbif",
        description="Radial k-Hessian bifurcation toolkit: shooting, branch "
                    "tracing, and machine-checked existence/multiplicity predicates.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eigen", help="first eigenvalue of the radial operator")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--coupled", action="store_true",
                   help="also compute the coupled-system eigenvalue lambda0")
    p.add_argument("--out", help="write result JSON here")
    _add_cfg_args(p)
    p.set_defaults(fn=cmd_eigen)

    p = sub.add_parser("trace", help="trace a bifurcation branch lambda(d)")
    p.add_argument("--spec", required=True, help="problem spec JSON")
    p.add_argument("--out-branch", required=True, help="branch CSV output")
    _add_trace_args(p)
    _add_cfg_args(p)
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("verify", help="trace and check theorem predicates")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-report", help="verification report JSON")
    p.add_argument("--out-branch", help="branch CSV output")
    p.add_argument("--samples", type=int, default=5)
    _add_trace_args(p)
    _add_cfg_args(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("system-trace", help="trace a coupled-system branch")
    p.add_argument("--spec", required=True, help="system spec JSON")
    p.add_argument("--out-branch", required=True)
    _add_trace_args(p)
    _add_cfg_args(p)
    p.set_defaults(fn=cmd_system_trace)

    p = sub.add_parser("system-verify", help="trace a system branch and check predicates")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-report")
    p.add_argument("--out-branch")
    p.add_argument("--samples", type=int, default=5)
    _add_trace_args(p)
    _add_cfg_args(p)
    p.set_defaults(fn=cmd_system_verify)

    p = sub.add_parser("power-pair", help="power-pair eigen manifold constant")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--mu-lo", type=float, default=None)
    p.add_argument("--mu-hi", type=float, default=None)
    p.add_argument("--out")
    _add_cfg_args(p)
    p.set_defaults(fn=cmd_power_pair)

    p = sub.add_parser("plot", help="render branch CSVs to a static SVG diagram")
    p.add_argument("--branch", nargs="+", required=True, help="branch CSV file(s)")
    p.add_argument("--out", required=True, help="SVG output path")
    p.add_argument("--interval", help="shade lambda band 'lo,hi' (hi may be inf)")
    p.add_argument("--title")
    p.set_defaults(fn=cmd_plot)

    p = sub.add_parser("sweep-k",
                       help="exploratory sweep of the fold threshold over k (no claims)")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", help="CSV summary output")
    _add_trace_args(p)
    _add_cfg_args(p)
    p.set_defaults(fn=cmd_sweep_k)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return args.fn(args)
    except InvalidInputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalFailureError, TracingFailureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except HessbifError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
