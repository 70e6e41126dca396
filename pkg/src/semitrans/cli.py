"""Command line interface: ``semitrans {fit,bootstrap,simulate,cv}``."""

from __future__ import annotations

import argparse
import logging
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from . import data_io
from .config import RunConfig, parse_config
from .cv import candidate_grid, cv_scores, pick
from .errors import (
    AllCellsFailed,
    BootstrapDegenerate,
    ConfigError,
    ConvergenceError,
    ConvergenceWarning,
    DegenerateData,
    DomainError,
    EmptyData,
    EmptyGrid,
    IoError,
    ParameterError,
    ParseError,
    RangeError,
    SingularDensity,
)
from .estimators import BandwidthPolicy, fit
from .inference import bootstrap_md, bootstrap_pl_naive
from .simulation import run_mc

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ESTIMATION = 0, 2, 3, 4
DATA_ERRORS = (ParseError, EmptyData, DegenerateData, DomainError, ParameterError, RangeError,
               ConvergenceError, IoError)

# dest name -> config key, for every flag that can override a config value
_KEYS = ("family", "method", "grid", "bandwidth", "h0", "h_per_coord", "cv_grid", "kernel",
         "seed", "B", "level", "recenter", "g", "theta", "models", "thetas", "methods",
         "h0_list", "n", "reps", "threads", "out")


_NEGATIVE = re.compile(r"^-\.?\d")


def _attach_negative_values(argv):
    """Turn ``--grid -0.5,1.5,0.1`` into ``--grid=-0.5,1.5,0.1``.

    argparse only accepts a dash-led value when it is a single number, so
    comma lists starting with a negative entry would otherwise be read as flags.
    """
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def _global_flags(parser, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="flat key = value config file")
    parser.add_argument("--seed", default=default, help="random seed")
    parser.add_argument("--threads", default=default, help="worker processes for simulate")
    parser.add_argument("--out", default=default, help="JSON output path (CSV written beside it)")


def _estimation_flags(parser):
    parser.add_argument("--method", help="md or pl")
    parser.add_argument("--transform", dest="family", help="boxcox, zellner or arcsinh")
    parser.add_argument("--grid", help="theta grid lo,hi,step")
    bw = parser.add_mutually_exclusive_group()
    bw.add_argument("--h0", help="fixed bandwidth constant, h = h0 n^(-1/5)")
    bw.add_argument("--h-per-coord", dest="h_per_coord", help="comma list of h0, one per covariate")
    bw.add_argument("--cv", dest="bandwidth", action="store_const", const="cv",
                    help="cross-validated bandwidths at every theta")
    parser.add_argument("--cv-grid", dest="cv_grid", help="comma list of candidate h0 values")
    parser.add_argument("--kernel", help="quartic or gaussian")
    parser.add_argument("--g", help="residual density bandwidth (default: Silverman)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semitrans", description=__doc__)
    _global_flags(parser, suppress=False)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="estimate theta on a CSV dataset")
    p.add_argument("data", help="CSV with a y column and covariate columns")
    _estimation_flags(p)
    _global_flags(p, suppress=True)

    p = sub.add_parser("bootstrap", help="pairs bootstrap of theta")
    p.add_argument("data")
    _estimation_flags(p)
    p.add_argument("--B", dest="B", help="number of bootstrap replicates")
    p.add_argument("--level", help="confidence level of the percentile interval")
    p.add_argument("--recenter", help="bootstrap (default) or original evaluation points")
    _global_flags(p, suppress=True)

    p = sub.add_parser("simulate", help="Monte Carlo study on the simulation design")
    p.add_argument("--models", help="comma list from 1,2,3")
    p.add_argument("--thetas", help="comma list of true theta values")
    p.add_argument("--methods", help="comma list from md,pl")
    bw = p.add_mutually_exclusive_group()
    bw.add_argument("--h0-list", dest="h0_list", help="comma list of fixed h0 values")
    bw.add_argument("--cv", dest="bandwidth", action="store_const", const="cv")
    p.add_argument("--cv-grid", dest="cv_grid")
    p.add_argument("--n", help="sample size")
    p.add_argument("--reps", help="replications per cell")
    p.add_argument("--grid", help="theta grid lo,hi,step")
    p.add_argument("--kernel")
    _global_flags(p, suppress=True)

    p = sub.add_parser("cv", help="cross-validation scores of the bandwidth grid at one theta")
    p.add_argument("data")
    p.add_argument("--theta", help="transformation parameter (default 1)")
    p.add_argument("--transform", dest="family")
    p.add_argument("--cv-grid", dest="cv_grid")
    p.add_argument("--kernel")
    _global_flags(p, suppress=True)
    return parser


def config_from_args(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in _KEYS}
    return parse_config(getattr(args, "config", None), overrides)


def _paths(out):
    """(json_path, csv_path) for ``--out``; the CSV sits beside the JSON."""
    p = Path(out)
    if p.suffix.lower() == ".csv":
        return p.with_suffix(".json"), p
    return p, p.with_suffix(".csv")


def _emit(result, cfg: RunConfig, csv_rows=None):
    if cfg.out is None:
        return
    jpath, cpath = _paths(cfg.out)
    data_io.emit_report(result, "json", jpath)
    if csv_rows is None:
        data_io.emit_report(result, "csv", cpath)
    else:
        data_io._atomic_write(cpath, data_io._csv_text(csv_rows))
    print(f"wrote {jpath} and {cpath}")


def cmd_fit(args, cfg: RunConfig) -> int:
    data = data_io.load_csv(args.data)
    res = fit(data, cfg.family, cfg.method, cfg.theta_grid, cfg.policy, cfg.kernel_spec, cfg.g)
    print(f"theta_hat = {res.theta_hat:.6g}  ({res.method.value}, {cfg.family}, "
          f"{len(res.curve)} grid points, {len(res.diagnostics['skipped'])} skipped)")
    _emit(res, cfg)
    return EXIT_OK


def cmd_bootstrap(args, cfg: RunConfig) -> int:
    data = data_io.load_csv(args.data)
    if cfg.method == "md":
        res = bootstrap_md(data, cfg.family, cfg.theta_grid, cfg.policy, cfg.B, cfg.level,
                           cfg.seed, cfg.kernel_spec, recenter=cfg.recenter)
    else:
        warnings.warn("the PL bootstrap is not recentered; its intervals are experimental")
        res = bootstrap_pl_naive(data, cfg.family, cfg.theta_grid, cfg.policy, cfg.B, cfg.level,
                                 cfg.seed, cfg.kernel_spec)
    se = "n/a" if res.se is None else f"{res.se:.6g}"
    lo, hi = res.ci
    print(f"theta_hat = {res.theta_hat:.6g}  se = {se}  {100 * cfg.level:g}% CI = "
          f"[{lo:.6g}, {hi:.6g}]  failures = {res.failures}/{res.B}")
    _emit(res, cfg)
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    if cfg.bandwidth == "cv":
        policies = [BandwidthPolicy.cv(cfg.cv_grid)]
    else:
        policies = [BandwidthPolicy.fixed(h) for h in cfg.h0_list]
    report = run_mc(cfg.models, cfg.thetas, cfg.methods, policies, cfg.n, cfg.reps, cfg.seed,
                    cfg.theta_grid, cfg.kernel_spec, n_jobs=cfg.threads, progress=True)
    print(report.summary())
    print(f"elapsed {report.elapsed:.6g} s")
    _emit(report, cfg)
    return EXIT_OK


def cmd_cv(args, cfg: RunConfig) -> int:
    data = data_io.load_csv(args.data)
    fam = cfg.family_spec
    if fam.requires_positive and not np.all(data.y > 0):
        raise DomainError(f"{fam.name} needs y > 0")
    z = fam.forward(cfg.theta, data.y)
    cands = candidate_grid(cfg.cv_grid, data.n, data.d)
    scores = cv_scores(data.x, z, cands, cfg.kernel_spec)[:, 0]
    best = pick(scores, cands, float(np.mean(z * z)))
    scale = data.n ** 0.2
    for c, s in zip(cands, scores):
        mark = " *" if c is cands[best] else ""
        print("h0 = " + ", ".join(f"{v * scale:.6g}" for v in c.h) + f"  CV = {s:.6g}{mark}")
    doc = {
        "theta": cfg.theta,
        "family": fam.name,
        "candidates": [list(c.h) for c in cands],
        "scores": [float(s) for s in scores],
        "selected": list(cands[best].h),
        "selected_h0": [v * scale for v in cands[best].h],
    }
    rows = [[f"h{a + 1}" for a in range(data.d)] + ["cv"]]
    rows += [[repr(v) for v in c.h] + [repr(float(s))] for c, s in zip(cands, scores)]
    _emit(doc, cfg, rows)
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "bootstrap": cmd_bootstrap, "simulate": cmd_simulate, "cv": cmd_cv}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_attach_negative_values(sys.argv[1:] if argv is None else list(argv)))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore", ConvergenceWarning)
        warnings.simplefilter("ignore", SingularDensity)
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AllCellsFailed, BootstrapDegenerate, EmptyGrid) as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # remaining argument errors, e.g. h_per_coord length against the data
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
