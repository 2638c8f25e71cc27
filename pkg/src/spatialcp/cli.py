"""Command-line interface: ``spatialcp {test,segment,simulate,fv}``.

Exit codes: 0 on completion, 2 on input or configuration errors, 3 when an
asymptotic calibration is undefined for the data at hand.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__
from .data import Method, ScanConfig, TestOutcome, load_csv
from .errors import CalibrationError, ConfigError, InputError, NuisanceError
from .fv import DEFAULT_GRID, DEFAULT_REPS, DEFAULT_SEED, FVTable, cache_path, cached_fv_table, simulate_fv
from .inference import ChangepointScan
from .segmentation import DEFAULT_LAMBDA_ABS, binary_segment
from .simulation import (
    Scenario,
    ScenarioSpec,
    run_accuracy_experiment,
    run_power_experiment,
    run_size_experiment,
)

EXIT_OK, EXIT_INPUT, EXIT_CALIBRATION = 0, 2, 3
SCHEMA_VERSION = 1

_METHODS = {
    ("smax", 0.0): Method.SMAX0, ("smax", 0.5): Method.SMAX05,
    ("ssum", 0.0): Method.SSUM0, ("ssum", 0.5): Method.SSUM05,
    ("scms", 0.0): Method.SCMS0, ("scms", 0.5): Method.SCMS05,
    ("mean", 0.0): Method.MEAN_BASELINE,
}


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def outcome_to_dict(o: TestOutcome, alpha: float) -> dict:
    nu = o.nuisances
    out = {
        "method": o.method.value,
        "label": o.method.label,
        "statistic": _num(o.statistic),
        "standardized": _num(o.standardized),
        "p_value": _num(o.p_value),
        "reject": bool(o.p_value < alpha),
        "k_argmax": o.k_argmax,
        "converged": bool(o.converged),
        "nuisances": None if nu is None else {
            "D_hat": [_num(v) for v in nu.D_hat],
            "zeta1_hat": _num(nu.zeta1_hat),
            "trR2_hat": _num(nu.trR2_hat),
            "front_converged": nu.fit_front.converged,
            "back_converged": nu.fit_back.converged,
            "zero_residuals": nu.zero_residuals,
        },
        "components": [outcome_to_dict(c, alpha) for c in o.components],
    }
    return out


def _config_dict(cfg: ScanConfig) -> dict:
    return {
        "boundary_fraction": cfg.boundary_fraction,
        "trim_fraction": cfg.trim_fraction,
        "hr_tolerance": cfg.hr_tolerance,
        "hr_max_iter": cfg.hr_max_iter,
        "alpha": cfg.alpha,
        "seed": cfg.seed,
        "mc_grid": cfg.mc_grid,
        "mc_reps": cfg.mc_reps,
        "lambda_abs": cfg.lambda_abs,
    }


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def _software() -> dict:
    return {"name": "spatialcp", "version": __version__, "schema_version": SCHEMA_VERSION}


def _fv_for(args, cfg: ScanConfig) -> FVTable:
    if args.fv_cache is None:
        return cached_fv_table(cfg.mc_grid, cfg.mc_reps, cfg.seed)
    path = Path(args.fv_cache)
    if path.is_file():
        return FVTable.load(path)
    table = simulate_fv(cfg.mc_grid, cfg.mc_reps, cfg.seed)
    table.save(path)
    return table


def _scan_config(args, **extra) -> ScanConfig:
    return ScanConfig(boundary_fraction=args.boundary_frac, trim_fraction=args.rho_trim, alpha=args.alpha,
                      seed=args.seed, mc_grid=args.fv_grid, mc_reps=args.fv_reps, **extra)


def cmd_test(args) -> int:
    gamma = float(args.gamma)
    if (args.method, gamma) not in _METHODS:
        raise ConfigError(f"method {args.method} is only defined for gamma=0")
    method = _METHODS[(args.method, gamma)]
    cfg = _scan_config(args)
    data = load_csv(args.csv, has_header=args.header)
    needs_fv = method in (Method.SSUM0, Method.SCMS0)
    scan = ChangepointScan(data, cfg, fv=_fv_for(args, cfg) if needs_fv else None)
    outcome = scan.outcome(method)
    _emit({
        "software": _software(),
        "command": "test",
        "input": {"path": str(args.csv), "n": data.n, "p": data.p},
        "config": _config_dict(cfg),
        "lambda_n": scan.window.lam,
        "result": outcome_to_dict(outcome, cfg.alpha),
    })
    return EXIT_OK


def cmd_segment(args) -> int:
    cfg = _scan_config(args, lambda_abs=args.lambda_abs)
    variant = Method.SCMS0 if float(args.variant) == 0 else Method.SCMS05
    data = load_csv(args.csv, has_header=args.header)
    fv = _fv_for(args, cfg) if variant is Method.SCMS0 else None
    res = binary_segment(data, cfg, variant=variant, alpha=cfg.alpha, fv=fv, lambda_abs=args.lambda_abs)
    report = {
        "software": _software(),
        "command": "segment",
        "input": {"path": str(args.csv), "n": data.n, "p": data.p},
        "config": _config_dict(cfg),
        "variant": variant.value,
        "changepoints": res.changepoints,
        "detections": [
            {"left": d.left, "right": d.right, "changepoint": d.changepoint, "lambda": d.lam,
             "located_by": d.method.value, "p_max": _num(d.p_max), "p_sum": _num(d.p_sum),
             "p_combined": _num(d.p_combined)}
            for d in res.detections
        ],
    }
    _emit(report)
    if args.text:
        print(f"{len(res.changepoints)} changepoint(s) with {variant.label}:", file=sys.stderr)
        for d in res.detections:
            print(f"  {d.changepoint:>7d}  in [{d.left}, {d.right}]  p={d.p_combined:.3g}  ({d.method.label})",
                  file=sys.stderr)
    return EXIT_OK


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_simulate(args) -> int:
    if args.reps < 1:
        raise ConfigError("--reps must be at least 1")
    methods = [Method(m.strip().upper()) for m in args.methods.split(",")] if args.methods else None
    cfg = ScanConfig(alpha=args.alpha)
    spec = ScenarioSpec(Scenario.parse(args.scenario), args.n, args.p, seed=args.seed)
    deltas = _floats(args.delta)
    fv = cached_fv_table(cfg.mc_grid, cfg.mc_reps, cfg.seed) if args.fv_cache is None else _fv_for(args, cfg)
    if args.accuracy:
        if args.tau_frac is None:
            raise ConfigError("--accuracy needs --tau-frac")
        k = _ints(args.sparsity)[0] if args.sparsity else args.p
        spec = ScenarioSpec(spec.scenario, args.n, args.p, tau=round(args.tau_frac * args.n),
                            Delta=deltas[0], k_sparsity=k, seed=args.seed)
        report = run_accuracy_experiment(spec, methods, args.reps, cfg, fv, n_jobs=args.jobs)
    elif args.tau_frac is None or all(d == 0 for d in deltas):
        report = run_size_experiment(spec, methods, args.reps, args.alpha, cfg, fv, n_jobs=args.jobs)
    else:
        spec = ScenarioSpec(spec.scenario, args.n, args.p, tau=round(args.tau_frac * args.n), seed=args.seed)
        sparsities = _ints(args.sparsity) if args.sparsity else [args.p]
        report = run_power_experiment(spec, deltas, sparsities, methods, args.reps, args.alpha, cfg, fv,
                                      n_jobs=args.jobs)
    text = report.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.table:
        print(report.to_text(), file=sys.stderr)
    return EXIT_OK


def cmd_fv(args) -> int:
    if args.out:
        table = simulate_fv(args.grid, args.reps, args.seed)
        path = table.save(args.out)
    else:
        table = cached_fv_table(args.grid, args.reps, args.seed)
        path = cache_path(args.grid, args.reps, args.seed)
    q90, q95, q99 = (float(v) for v in table.quantile([0.90, 0.95, 0.99]))
    _emit({
        "software": _software(),
        "command": "fv",
        "grid": table.grid, "reps": table.reps, "seed": table.seed,
        "path": str(path),
        "quantiles": {"q90": q90, "q95": q95, "q99": q99},
    })
    return EXIT_OK


def _add_scan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--boundary-frac", type=float, default=0.2, help="boundary fraction (default 0.2)")
    p.add_argument("--rho-trim", type=float, default=0.2, help="trim fraction for nuisances (default 0.2)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed of the F_V table")
    p.add_argument("--fv-cache", default=None, help="F_V table file (created if missing)")
    p.add_argument("--fv-grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--fv-reps", type=int, default=DEFAULT_REPS)
    p.add_argument("--header", action="store_true", help="skip a header row in the CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spatialcp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test one dataset for a single changepoint")
    p.add_argument("csv")
    p.add_argument("--method", choices=["smax", "ssum", "scms", "mean"], default="scms")
    p.add_argument("--gamma", choices=["0", "0.5"], default="0")
    _add_scan_flags(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("segment", help="binary segmentation for multiple changepoints")
    p.add_argument("csv")
    p.add_argument("--lambda-abs", type=int, default=DEFAULT_LAMBDA_ABS)
    p.add_argument("--variant", choices=["0", "0.5"], default="0.5")
    p.add_argument("--text", action="store_true", help="also print a summary on stderr")
    _add_scan_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("simulate", help="size, power or accuracy experiment; CSV output")
    p.add_argument("--scenario", default="I", help="I/NORMAL, II/STUDENT_T6 or III/MIXTURE")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--delta", default="0", help="signal strength(s), comma separated")
    p.add_argument("--sparsity", default=None, help="number(s) of changed coordinates")
    p.add_argument("--tau-frac", type=float, default=None)
    p.add_argument("--methods", default=None, help="comma separated, e.g. SMAX0,SCMS05")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--accuracy", action="store_true", help="report mean |tau_hat - tau| / n")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--table", action="store_true", help="also print a text table on stderr")
    p.add_argument("--fv-cache", default=None)
    p.add_argument("--fv-grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--fv-reps", type=int, default=DEFAULT_REPS)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fv", help="build the F_V table and print its upper quantiles")
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)
    p.add_argument("--reps", type=int, default=DEFAULT_REPS)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fv)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CalibrationError, NuisanceError) as exc:
        print(f"spatialcp: calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (InputError, ConfigError, ValueError) as exc:
        print(f"spatialcp: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
