"""Command line entry points.

Exit codes: 0 success, 1 a check or audit failed, 2 invalid configuration,
3 an iterate or datum left the ellipticity cone, 4 a solver did not converge.
"""
import argparse
import csv
import io
import json
import math
from pathlib import Path
import sys

import numpy as np

from . import estimates, identities
from .catalog import scalar_derivatives
from .config import load_config
from .errors import (ConfigError, ContinuationStalled, DomainError, FixedPointStalled,
                     NoConvergence, NotAdmissible)
from .fieldio import read_field, write_field
from .geometry import GridField, TensorField, augmented_array, grad_array, hess_array
from .pde import _raise_first, admissible_segment_test
from .solver import (DEFAULT_SCHEDULE, NormalizedProblem, continuation_solve,
                     fixed_point_solve, normalized_residual, solve_normalized)
from .symfunc import evaluate_batch

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_CONE, EXIT_SOLVER = 0, 1, 2, 3, 4


def _clean(obj):
    """JSON-safe copy: non-finite floats become None, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def _dumps(rec):
    return json.dumps(_clean(rec), sort_keys=True)


def write_jsonl(path, records):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(_dumps(r) + "\n" for r in records))


def _error_record(exc, code):
    rec = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    for attr in ("index", "order", "value", "iterations", "residual", "t_reached", "gap", "t"):
        if hasattr(exc, attr):
            rec[attr] = getattr(exc, attr)
    return rec


# -- solve ----------------------------------------------------------------------------

def _standard(cfg, p, opts, audit):
    u, trace = continuation_solve(p, opts)
    for st in trace:
        audit.append(dict(st.c0.to_record(), t=st.t))
    audit.append(dict(check="diagnostics", **estimates.diagnostics(u, p)))
    for rel in cfg.raw.get("compare_solutions", []):
        other = read_field(cfg.path(rel))
        seg = admissible_segment_test(GridField(u.grid, np.exp(u.values)),
                                      GridField(u.grid, np.exp(other.values)), p, 33)
        audit.append({"check": "segment", "other": rel, "passed": seg.passed,
                      "s": seg.s, "index": seg.index})
    return u, [st.record for st in trace]


def _determinant_audit(u, p, S, audit):
    audit.append(estimates.verify_harnack(u, S, p.grid.diameter).to_record())
    audit.append(estimates.verify_v_convexity(u, S).to_record())
    audit.append(dict(check="diagnostics", **estimates.diagnostics(u, p)))


def _normalized(cfg, p, opts, audit):
    t = float(cfg.raw.get("t", 1.0))
    try:
        estimates.harnack_gap(p.S, p.grid.diameter)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    npb = NormalizedProblem(p, cfg.raw.get("mean_weight"))
    f = p.psi.f
    u = solve_normalized(npb, t, f, opts)
    mean = npb.mean(u)
    res = normalized_residual(npb, t, f, u)
    St = TensorField(p.grid, np.broadcast_to(npb.blended_S(t), p.S.values.shape))
    rhs = GridField(p.grid, f.values ** t)
    audit.append(estimates.verify_mean_bounds(u, St, rhs, mean).to_record())
    _determinant_audit(u, p, St, audit)
    rec = {"t": t, "residual_sup": float(np.abs(res.values).max()), "mean": mean,
           "u_min": u.min(), "u_max": u.max()}
    return u, [rec]


def _fixed_point(cfg, p, opts, audit):
    sched = cfg.raw.get("t_schedule", list(DEFAULT_SCHEDULE))
    try:
        u, trace = fixed_point_solve(p, sched, opts, cfg.raw.get("mean_weight"))
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    _determinant_audit(u, p, p.S, audit)
    audit.append(estimates.verify_c0(u, estimates.c0_bounds(p)).to_record())
    d = p.grid.dim
    sp = p.grid.spacing
    M = augmented_array(hess_array(u.values, sp), grad_array(u.values, sp), p.S.values)
    ev = evaluate_batch(M.reshape(-1, d, d), d, 1.0)
    if not ev.admissible.all():
        _raise_first(ev, p.grid.shape, "fixed-point output")
    res = ev.root - p.psi.value(u.values).ravel()
    audit.append({"check": "equation_residual", "residual_sup": float(np.abs(res).max())})
    return u, trace


SOLVERS = {
    "standard": _standard,
    "negative-experimental": _standard,
    "determinant-normalized": _normalized,
    "determinant-fixed-point": _fixed_point,
}


def _reference_error(cfg, u, audit):
    ref = cfg.raw.get("reference")
    if not ref:
        return
    r = read_field(cfg.path(ref))
    err = float(np.abs(u.values - r.values).max())
    h = max(u.grid.spacing)
    audit.append({"check": "reference_error", "sizes": list(u.grid.sizes), "h": h,
                  "sup_error": err})
    table = cfg.raw.get("error_table")
    if table:
        path = cfg.path(table)
        new = not path.exists()
        with path.open("a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(["sizes", "h", "sup_error"])
            w.writerow(["x".join(map(str, u.grid.sizes)), repr(h), repr(err)])


def _audit_passed(audit):
    return all(rec.get("passed", True) for rec in audit)


def cmd_solve(args):
    try:
        cfg = load_config(args.config, args.experimental)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else cfg.path(cfg.raw.get("output", "out"))
    seed = args.seed if args.seed is not None else cfg.seed
    fmt = cfg.raw.get("field_format", "bin")
    audit, trace, u, error = [], [], None, None
    code = EXIT_OK
    try:
        p = cfg.problem()
        opts = cfg.options()
        u, trace = SOLVERS[cfg.variant](cfg, p, opts, audit)
        _reference_error(cfg, u, audit)
        if not _audit_passed(audit):
            code = EXIT_CHECK
    except ConfigError as exc:
        code, error = EXIT_CONFIG, exc
    except NotAdmissible as exc:
        code, error = EXIT_CONE, exc
    except (NoConvergence, ContinuationStalled, FixedPointStalled) as exc:
        code, error = EXIT_SOLVER, exc
        partial = getattr(exc, "trace", [])
        trace = [getattr(s, "record", s) for s in partial]
    out.mkdir(parents=True, exist_ok=True)
    if u is not None:
        write_field(u, out / "solution", fmt)
    write_jsonl(out / "trace.jsonl", trace)
    write_jsonl(out / "audit.jsonl", audit)
    result = {"config": Path(args.config).name, "variant": cfg.variant, "seed": seed,
              "exit_code": code, "audit_passed": _audit_passed(audit)}
    if error is not None:
        result["error"] = _error_record(error, code)
        (out / "error.json").write_text(_dumps(result["error"]) + "\n")
        print(f"{type(error).__name__}: {error}", file=sys.stderr)
    (out / "result.json").write_text(_dumps(result) + "\n")
    if u is not None:
        print(f"solution: u in [{u.min():.10g}, {u.max():.10g}], "
              f"{len(trace)} trace records, audit {'pass' if result['audit_passed'] else 'FAIL'}")
    return code


# -- manufacture ----------------------------------------------------------------------

def cmd_manufacture(args):
    try:
        cfg = load_config(args.config, args.experimental)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raw = cfg.raw
    out = Path(args.out) if args.out else cfg.path(raw.get("output", "manufactured"))
    out.mkdir(parents=True, exist_ok=True)
    target = raw.get("target", {"shape": "constant", "base": 0.0})
    d = raw["dimension"]
    chain = [(n,) * d for n in raw["refine"]] if "refine" in raw else [tuple(raw["sizes"])]
    fmt = raw.get("field_format", "bin")
    written = []
    for sizes in chain:
        tag = "x".join(map(str, sizes))
        try:
            grid = cfg.grid(sizes)
            p = cfg.problem(grid)
            v, g, H = scalar_derivatives(target, grid)
            M = augmented_array(H, g, p.S.values, p.sgn).reshape(-1, d, d)
            ev = evaluate_batch(M, p.k, 1.0)
            if not ev.admissible.all():
                _raise_first(ev, grid.shape, "target u*")
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except NotAdmissible as exc:
            (out / "error.json").write_text(_dumps(_error_record(exc, EXIT_CONE)) + "\n")
            print(f"NotAdmissible: {exc}", file=sys.stderr)
            return EXIT_CONE
        f = GridField(grid, ev.root.reshape(grid.shape) * np.exp(-v))
        write_field(f, out / f"f_{tag}", fmt)
        write_field(GridField(grid, v), out / f"ustar_{tag}", fmt)
        derived = {key: val for key, val in raw.items()
                   if key not in ("target", "refine", "output", "psi", "reference",
                                  "error_table", "compare_solutions")}
        derived.update({
            "sizes": list(sizes),
            "psi": {"f": {"file": f"f_{tag}.json"}, "a": 1.0},
            "reference": f"ustar_{tag}.json",
            "error_table": "errors.csv",
            "output": f"solve_{tag}",
        })
        name = out / f"config_{tag}.json"
        name.write_text(json.dumps(derived, indent=1, sort_keys=True) + "\n")
        written.append(name.name)
        print(f"{name}: f in [{f.min():.6g}, {f.max():.6g}]")
    (out / "manifest.json").write_text(_dumps({"configs": written, "target": target}) + "\n")
    return EXIT_OK


# -- models / bounds ------------------------------------------------------------------

MODEL_COLUMNS = ("model", "real_dim", "ricci_multiple", "scalar_curv", "schouten_multiple",
                 "diameter", "invariant", "expected", "feasible")


def cmd_models(args):
    rows = estimates.model_rows()
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=MODEL_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "models.csv").write_text(buf.getvalue())
    print(f"{'model':<22}{'A_g multiple':>14}{'D':>12}{'lambda D^2':>16}{'expected':>16}  feasible")
    for r in rows:
        print(f"{r['model']:<22}{r['schouten_multiple']:>14.6g}{r['diameter']:>12.6g}"
              f"{r['invariant']:>16.12g}{r['expected']:>16.12g}  {r['feasible']}")
    return EXIT_OK


def cmd_bounds(args):
    try:
        cfg = load_config(args.config, args.experimental)
        p = cfg.problem()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    recs = []
    b = estimates.c0_bounds(p)
    recs.append({"check": "c0_bounds", "lower": b.lower, "upper": b.upper,
                 "reversed": b.reversed})
    mode = "negative" if p.sign == "negative" else "positive"
    pc = estimates.phi_constants(b, mode)
    ok, m1, m2 = pc.check()
    recs.append({"check": "phi_constants", "c1": pc.c1, "c2": pc.c2, "p": pc.p, "mode": mode,
                 "verified": ok, "min_first": m1, "min_second": m2})
    D = p.grid.diameter
    lam = estimates.lambda_max(p.S)
    rec = {"check": "harnack_gap", "diameter": D, "lambda_max": lam,
           "lambda_D2": lam * D * D, "feasible": True}
    try:
        rec["gap"] = estimates.harnack_gap(p.S, D)
    except DomainError as exc:
        rec.update(feasible=False, gap=None, reason=str(exc))
    recs.append(rec)
    seed = args.seed if args.seed is not None else cfg.seed
    recs.insert(0, {"check": "header", "config": Path(args.config).name, "seed": seed})
    if args.out:
        write_jsonl(Path(args.out) / "bounds.jsonl", recs)
    for r in recs:
        print(_dumps(r))
    return EXIT_OK


# -- identities -----------------------------------------------------------------------

def cmd_verify_identities(args):
    seed = 42 if args.seed is None else args.seed
    results = identities.run_suite((args.n_min, args.n_max), args.trials, seed,
                                   args.inject_fault)
    recs = [{"check": "header", "seed": seed, "trials": args.trials,
             "n_range": [args.n_min, args.n_max]}]
    recs += [r.to_record() for r in results]
    if args.out:
        write_jsonl(Path(args.out) / "identities.jsonl", recs)
    failed = False
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.identity:<24} checked={r.checked:<8} "
              f"violations={r.violations:<6} worst={r.worst_error:.3e}")
        if not r.passed:
            failed = True
            print(f"violation: {r.identity} at {r.worst_case}; matrix "
                  f"{json.dumps(r.counterexample)}", file=sys.stderr)
    return EXIT_CHECK if failed else EXIT_OK


# -- entry point ----------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="sigmak", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="run configuration (JSON)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--experimental", action="store_true",
                        help="acknowledge the negative-cone variant")

    sp = sub.add_parser("verify-identities", help="randomized identity suite")
    common(sp, config=False)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--n-min", type=int, default=2)
    sp.add_argument("--n-max", type=int, default=6)
    sp.add_argument("--inject-fault", default=None, choices=identities.FAULTS,
                    help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_verify_identities)

    for name, func, text in (("solve", cmd_solve, "solve a configured problem"),
                             ("manufacture", cmd_manufacture, "emit manufactured problems"),
                             ("bounds", cmd_bounds, "a-priori bounds without solving")):
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("models", help="model-geometry invariant table")
    common(sp, config=False)
    sp.set_defaults(func=cmd_models)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "trials", 0) < 0:
        print("--trials must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    if hasattr(args, "n_min") and not 2 <= args.n_min <= args.n_max <= 8:
        print("need 2 <= --n-min <= --n-max <= 8", file=sys.stderr)
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
