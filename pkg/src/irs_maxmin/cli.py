"""Command-line front end: run / sweep / validate / gradcheck."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .config import SystemConfig, load_config
from .errors import ConfigurationError, ConvergenceError
from .harness import ExperimentSpec, GradcheckReport, gradcheck, run_experiment


def _parse_values(text: str) -> list[float]:
    values = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        values.append(math.inf if tok.lower() in ("inf", "+inf") else float(tok))
    if not values:
        raise ConfigurationError("empty --values list")
    return values


def _add_common(sub):
    sub.add_argument("--config", type=Path, default=None,
                     help="YAML scenario file (defaults to the built-in desk scenario)")
    sub.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sub.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    sub.add_argument("--threads", type=int, default=1, help="worker threads")
    sub.add_argument("--label", type=str, default=None, help="output file stem")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irs-maxmin",
        description="Max-min weighted uplink SINR of an IRS-assisted massive "
                    "MIMO system with hardware impairments.")
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="solve one scenario")
    _add_common(run)

    for name, text in (("sweep", "solve along a parameter axis"),
                       ("validate", "sweep plus Monte Carlo cross-check")):
        sp = subs.add_parser(name, help=text)
        _add_common(sp)
        sp.add_argument("--axis", required=True,
                        choices=("N", "M", "p_max", "kappa", "kappa_theta"))
        sp.add_argument("--values", required=True, type=_parse_values,
                        help="comma-separated increasing values ('inf' allowed)")
        if name == "validate":
            sp.add_argument("--trials", type=int, default=500,
                            help="Monte Carlo trials per point")

    gc = subs.add_parser("gradcheck", help="analytic vs finite-difference gradient")
    _add_common(gc)
    gc.add_argument("--tol", type=float, default=1e-4, help="pass threshold")
    gc.add_argument("--step", type=float, default=1e-6, help="finite-difference step")

    return parser


def _load(args) -> SystemConfig:
    cfg = load_config(args.config) if args.config else SystemConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except (ConfigurationError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)

    try:
        if args.command == "gradcheck":
            if cfg.M * max(cfg.N, 1) * cfg.K > 1024:
                cfg = cfg.replace(M=8, N=4, K=2)   # finite differences stay fast
            report = gradcheck(cfg, step=args.step, tolerance=args.tol)
            _print_gradcheck(report)
            return 0 if report.passed else 3

        label = args.label or (args.command if args.command != "run" else "run")
        spec = ExperimentSpec(
            cfg=cfg, mode=args.command,
            axis=getattr(args, "axis", None),
            values=getattr(args, "values", None),
            trials=getattr(args, "trials", 500),
            outdir=args.out, threads=args.threads, label=label)
        result = run_experiment(spec)
        for row in result.rows:
            status = row.error or "ok"
            value = "" if math.isnan(row.sweep_value) else f"{args.command} {row.sweep_value:g}: "
            print(f"{value}tau_bar={row.tau_bar:.6g} min_rate={row.min_rate:.6g} "
                  f"[{status}]")
        print("wrote", ", ".join(str(p) for p in result.files.values()))
        if result.failed:
            return _fail("ConvergenceError",
                         f"{result.failed} of {len(result.rows)} rows failed", 2)
        return 0
    except ConfigurationError as exc:
        return _fail("ConfigurationError", str(exc), 1)
    except ConvergenceError as exc:
        return _fail("ConvergenceError", str(exc), 2)


def _print_gradcheck(report: GradcheckReport):
    verdict = "PASS" if report.passed else "FAIL"
    print(f"gradcheck: max relative error {report.max_rel_error:.3e} "
          f"(tolerance {report.tolerance:g}) -> {verdict}")
    if report.zero_gradient:
        print("gradcheck: gradient identically zero (phase-independent statistics)")
    if not report.passed:
        print(f"gradcheck: worst entry UE k={report.worst_ue}, element n={report.worst_element}")


if __name__ == "__main__":
    sys.exit(main())
