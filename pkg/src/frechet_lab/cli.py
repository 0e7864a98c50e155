"""Command line driver: ``frechet-lab <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 bad arguments or input
file, 3 infeasible smeary design, 4 density/regime mismatch, 5 experiment
invalid (too many non-converged replicates).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_REGIME = 4
EXIT_INVALID = 5

JOBS_ENV = "FRECHET_LAB_JOBS"
COMMON_DEFAULTS = {"seed": 0, "out_dir": ".", "format": "json"}


class CliError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------------
# output helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def write_json(obj, path: Path) -> Path:
    path.write_text(json.dumps(_jsonable(obj), indent=2) + "\n")
    return path


def write_csv(rows, path: Path) -> Path:
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        if rows:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(_jsonable(rows))
    return path


def write_records(obj, rows, args, stem: str) -> Path:
    """Machine output in the --format of choice: JSON of ``obj`` or CSV of ``rows``."""
    out = Path(args.out_dir)
    if args.format == "csv":
        return write_csv(rows, out / f"{stem}.csv")
    return write_json(obj, out / f"{stem}.json")


def print_table(rows, header=("quantity", "value")):
    rows = [(str(a), _fmt(b)) for a, b in rows]
    width = max(len(header[0]), *(len(a) for a, _ in rows))
    print(f"{header[0]:<{width}}  {header[1]}")
    print(f"{'-' * width}  {'-' * max(5, len(header[1]))}")
    for a, b in rows:
        print(f"{a:<{width}}  {b}")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.10g}"
    if v is None:
        return "-"
    if hasattr(v, "value"):
        return v.value
    return str(v)


def _load_density(path, d):
    from .density_io import read_density
    from .radial import normalize

    f = read_density(path)
    d = f.dimension if d is None else d
    if d is None:
        raise CliError(f"{path}: the file states no dimension; pass --d")
    if f.dimension is not None and f.normalized and f.dimension != d:
        raise CliError(f"{path}: density is normalized for d = {f.dimension}, not {d}")
    return normalize(f, d), d


def read_points(path) -> np.ndarray:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
        pts = data["points"] if isinstance(data, dict) else data
        return np.asarray(pts, dtype=float)
    rows = list(csv.reader(text.splitlines()))
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    return np.asarray([[float(v) for v in r] for r in rows if r], dtype=float)


# --------------------------------------------------------------------------
# commands


def cmd_coefficients(args) -> int:
    from .radial import classify

    f, d = _load_density(args.density, args.d)
    rep = classify(f, d, tol=args.tol, method=args.method)
    print_table(
        [
            ("dimension d", d),
            ("alpha_d", rep.alpha),
            ("beta_d", rep.beta),
            ("fourth directional", rep.fourth_directional),
            ("differentiability order", rep.diff_order),
            ("classification", rep.classification),
            ("method", rep.method),
        ]
    )
    write_records(rep.to_dict(), [rep.to_dict()], args, "coefficients")
    return EXIT_OK


def cmd_design_smeary(args) -> int:
    from .density_io import write_density
    from .radial import classify
    from .smeary import InfeasibleDesignError, design_smeary

    if args.d < 4:
        raise CliError(f"smeary designs need d >= 4; for d = {args.d} the fourth derivative at the pole is negative",
                       EXIT_INFEASIBLE)
    try:
        design = design_smeary(args.phi1, args.d, args.epsilon)
    except (InfeasibleDesignError, ValueError) as e:
        raise CliError(f"infeasible design: {e}", EXIT_INFEASIBLE) from None
    f = design.density()
    rep = classify(f, args.d)
    out = Path(args.out_dir)
    path = write_density(f, out / f"smeary_d{args.d}.density.json")
    info = design.to_dict()
    info.update(classification=rep.classification.value, density_file=path.name)
    write_records(info, [info], args, f"smeary_d{args.d}.design")
    print_table(
        [
            ("d", design.d),
            ("phi1", design.phi1),
            ("epsilon used", design.epsilon),
            ("epsilon halvings", design.halvings),
            ("c1", design.c1),
            ("c2", design.c2),
            ("c1/c2 (alpha_d = 0)", design.ratio),
            ("c1/c2 (quoted closed form)", design.printed_ratio),
            ("alpha check", design.alpha_check),
            ("beta check", design.beta_check),
            ("classification", rep.classification),
            ("density file", path),
        ]
    )
    return EXIT_OK


def cmd_clt(args) -> int:
    from . import plotting
    from .clt import Regime, RegimeMismatchError, compare_to_limit, run_scaling_experiment
    from .density_io import read_clt_config

    cfg = read_clt_config(args.config)
    if "seed" in args.explicit:
        cfg.seed = args.seed
    try:
        result = run_scaling_experiment(cfg, jobs=args.jobs)
    except RegimeMismatchError as e:
        raise CliError(str(e), EXIT_REGIME) from None
    out = Path(args.out_dir)
    summary = result.to_dict()
    rows = list(result.rows())
    write_csv(rows, out / "clt_replicates.csv")
    if args.format == "json":
        write_json(rows, out / "clt_replicates.json")
    ok = result.converged[-1] & np.isfinite(result.norms[-1])
    fit = result.fit
    if not math.isfinite(fit.slope) or ok.sum() < 2:
        write_json(summary, out / "clt_result.json")
        for note in result.notes:
            print(f"note: {note}")
        print("no fit or limit comparison: too few converged replicates", file=sys.stderr)
        return EXIT_INVALID
    limit, draws = compare_to_limit(result, cfg, n_draws=args.limit_draws, return_draws=True)
    summary["limit"] = limit
    write_json(summary, out / "clt_result.json")
    ref = -cfg.regime.rate
    label = "classical" if cfg.regime is Regime.CLASSICAL else "smeary"
    plotting.scaling_plot(fit, ref, out / "clt_scaling.png", title=f"{label}, d = {cfg.d}")
    plotting.rescaled_scatter(result.rescaled[-1][ok], draws, out / "clt_rescaled.png",
                              title=f"n = {result.sizes[-1]}, rescaled by n^{cfg.regime.rate:.4g}")
    rows_out = [
        ("regime", cfg.regime),
        ("replicates", cfg.replicates),
        ("sizes", " ".join(str(n) for n in result.sizes)),
        ("sizes used in fit", " ".join(str(n) for n in fit.used_sizes)),
        ("fitted slope", fit.slope),
        ("slope std. error", fit.stderr),
        ("reference slope", ref),
        ("curvature p-value", fit.curvature_p),
        ("non-convergence rate", result.nonconvergence_rate),
        ("min KS p-value", min(limit["ks_pvalues"])),
        ("energy distance", limit["energy_distance"]),
        ("Rayleigh p-value", limit["rayleigh_pvalue"]),
    ]
    print_table(rows_out)
    for note in result.notes + ([limit["disclaimer"]] if "disclaimer" in limit else []):
        print(f"note: {note}")
    return EXIT_OK if result.valid else EXIT_INVALID


def cmd_verify(args) -> int:
    from .verify import run_suites

    checks = run_suites(args.suite, seed=args.seed, fd_configs=args.fd_configs)
    print(f"{'status':<6}  {'suite':<12}  {'check':<52}  {'value':>10}  {'limit':>8}")
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL':<6}  {c.suite:<12}  {c.name:<52}  {c.value:>10.3g}  {c.threshold:>8.1g}")
    failed = [c for c in checks if not c.passed]
    summary = {"suite": args.suite, "passed": not failed, "checks": [c.to_dict() for c in checks]}
    write_records(summary, [c.to_dict() for c in checks], args, "verify")
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


def cmd_sample(args) -> int:
    from .sampling import RadialSampler

    f, d = _load_density(args.density, args.d)
    pole = None if args.pole is None else np.asarray(args.pole, dtype=float)
    if pole is not None and pole.size != d + 1:
        raise CliError(f"--pole needs {d + 1} coordinates")
    pts = RadialSampler(f, d, pole=pole, seed=args.seed).sample(args.n)
    rows = [{f"x{j}": float(v) for j, v in enumerate(p)} for p in pts]
    path = write_records({"d": d, "seed": args.seed, "points": pts}, rows, args, "samples")
    print(f"wrote {args.n} points on S^{d} to {path}")
    return EXIT_OK


def cmd_estimate_mean(args) -> int:
    from .frechet import estimate_mean
    from .sphere import CutLocusError

    pts = read_points(args.points)
    init = None if args.init is None else np.asarray(args.init, dtype=float)
    try:
        est = estimate_mean(pts, init=init, step=args.step, tol=args.tol, max_iter=args.max_iter,
                            step_rule=args.step_rule)
    except CutLocusError as e:
        raise CliError(f"descent hit the cut locus: {e}") from None
    rec = {
        "point": est.point,
        "grad_norm": est.grad_norm,
        "iterations": est.iterations,
        "converged": est.converged,
        "value": est.value,
        "initialization": "extrinsic mean" if init is None else "given",
    }
    row = {f"x{j}": float(v) for j, v in enumerate(est.point)}
    row.update({k: v for k, v in rec.items() if k != "point"})
    write_records(rec, [row], args, "mean")
    print_table(
        [
            ("points", len(pts)),
            ("mean", " ".join(f"{v:.12g}" for v in est.point)),
            ("gradient norm", est.grad_norm),
            ("iterations", est.iterations),
            ("converged", est.converged),
        ]
    )
    return EXIT_OK if est.converged else EXIT_INVALID


# --------------------------------------------------------------------------
# parser


def _common_parser() -> argparse.ArgumentParser:
    # defaults are filled in after parsing so flags work before or after the command
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("common options")
    g.add_argument("--seed", type=int, help="base random seed (default 0)")
    g.add_argument("--jobs", type=int, help=f"worker processes (default ${JOBS_ENV} or 1)")
    g.add_argument("--out-dir", dest="out_dir", help="directory for output files (default .)")
    g.add_argument("--format", choices=("json", "csv"), help="machine output format (default json)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="frechet-lab",
        description="Frechet means on spheres: coefficients, smeary designs and CLT experiments.",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("coefficients", parents=[common], help="alpha_d, beta_d and classification of a density")
    p.add_argument("density", help="density file (JSON)")
    p.add_argument("--d", type=int, default=None, help="sphere dimension (default: from the file)")
    p.add_argument("--method", choices=("auto", "exact", "quadrature"), default="auto")
    p.add_argument("--tol", type=float, default=None, help="zero tolerance for alpha_d and beta_d")
    p.set_defaults(func=cmd_coefficients)

    p = sub.add_parser("design-smeary", parents=[common], help="build a cap+strip density with a smeary pole")
    p.add_argument("--phi1", type=float, default=1.0, help="cap radius in (0, pi/2) (default 1.0)")
    p.add_argument("--d", type=int, required=True, help="sphere dimension, at least 4")
    p.add_argument("--epsilon", type=float, default=None, help="starting strip gap (default: suggested value)")
    p.set_defaults(func=cmd_design_smeary)

    p = sub.add_parser("clt", parents=[common], help="run a CLT scaling experiment from a config file")
    p.add_argument("config", help="experiment config (JSON)")
    p.add_argument("--limit-draws", dest="limit_draws", type=int, default=10_000,
                   help="draws from the limit law for the distance report")
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("verify", parents=[common], help="run built-in self checks")
    p.add_argument("suite", nargs="?", default="all", choices=("tensors", "coefficients", "geometry", "all"))
    p.add_argument("--fd-configs", dest="fd_configs", type=int, default=100,
                   help="random configurations per dimension for the tensor suite")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", parents=[common], help="draw points from a density")
    p.add_argument("density", help="density file (JSON)")
    p.add_argument("--n", type=int, required=True, help="number of points")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--pole", type=float, nargs="+", default=None, help="pole coordinates (default e1)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate-mean", parents=[common], help="sample Frechet mean of a point file")
    p.add_argument("points", help="points as CSV (one point per row) or JSON")
    p.add_argument("--init", type=float, nargs="+", default=None, help="starting point (default: extrinsic mean)")
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=10_000)
    p.add_argument("--step-rule", dest="step_rule", choices=("fixed", "bb"), default="fixed")
    p.set_defaults(func=cmd_estimate_mean)
    return parser


def _resolve_common(args):
    explicit = {k for k in ("seed", "jobs", "out_dir", "format") if hasattr(args, k)}
    for k, v in COMMON_DEFAULTS.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    if not hasattr(args, "jobs"):
        env = os.environ.get(JOBS_ENV)
        try:
            args.jobs = int(env) if env else 1
        except ValueError:
            raise CliError(f"{JOBS_ENV}={env!r} is not an integer") from None
    if args.jobs < 1:
        raise CliError("--jobs must be at least 1")
    args.explicit = explicit
    Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    return args


def main(argv=None) -> int:
    from .density_io import ConfigError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _resolve_common(args)
        return args.func(args)
    except CliError as e:
        print(f"frechet-lab: error: {e}", file=sys.stderr)
        return e.code
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"frechet-lab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"frechet-lab: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
