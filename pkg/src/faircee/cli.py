"""Command-line entry point: ``faircee {generate,fit,tradeoff,estimators,propensity}``.

Exit status is 0 on success, 1 on usage or validation errors and 2 when the
only failure is an infeasible or degenerate fairness constraint.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness, models
from . import synthetic as syn
from .data import CsvConfig, csv_config_for, load_config, load_csv, save_csv
from .errors import (
    DegenerateConstraintError,
    FairCEEError,
    HarnessError,
    MultiMDInfeasible,
)
from .propensity import fit_propensity
from .solvers import PgmOptions

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _truth_path(csv_path):
    p = Path(csv_path)
    return p.with_name(p.stem + ".truth.json")


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load(args):
    """Dataset plus optional ground truth for ``--csv``/``--config`` arguments."""
    cfg_path = args.config or _truth_path(args.csv)
    if not Path(cfg_path).exists():
        raise FairCEEError(f"no column config given and {cfg_path} does not exist")
    config = load_config(cfg_path)
    if getattr(args, "no_intercept", False):
        config = replace(config, intercept=False)
    ds = load_csv(args.csv, config)
    truth = None
    with open(cfg_path, encoding="utf-8") as f:
        doc = json.load(f)
    if "discrim" in doc and "explanatory_bias" in doc:
        truth = syn.GroundTruth(float(doc["discrim"]), float(doc["explanatory_bias"]))
    return ds, truth


def _synthetic_config(args):
    if args.synthetic_config:
        with open(args.synthetic_config, encoding="utf-8") as f:
            cfg = syn.SyntheticConfig(**json.load(f))
    else:
        cfg = syn.preset(args.case)
    over = {}
    if args.N is not None:
        over["N"] = args.N
    if getattr(args, "no_intercept", False):
        over["intercept"] = False
    return replace(cfg, **over) if over else cfg


def cmd_generate(args):
    cfg = replace(_synthetic_config(args), seed=args.seed)
    ds, truth = syn.generate(cfg)
    out = Path(args.out)
    save_csv(ds, out)
    syn.write_sidecar(args.truth or _truth_path(out), cfg, truth, csv_config_for(ds))
    print(f"wrote {out} (N={ds.N}, S=1: {int(ds.s.sum())}, discrim={truth.discrim:.6g}, "
          f"explanatory_bias={truth.explanatory_bias:.6g})")
    return EXIT_OK


def cmd_fit(args):
    ds, truth = _load(args)
    spec = models.parse_method(
        args.method, solver_opts=PgmOptions(args.eta0, args.beta, args.max_iter, args.grad_tol)
    )
    try:
        fitted = models.fit(ds, spec)
    except (MultiMDInfeasible, DegenerateConstraintError) as e:
        print(f"infeasible: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    doc = models.to_dict(fitted)
    row = harness.evaluate(fitted, harness.Trial(0, ds, ds, truth, fitted.scores_used))
    doc["metrics"] = {k: v for k, v in vars(row).items()
                      if k in ("loss", "md_pred", "discrim_pred", "md_probs") and v is not None}
    text = json.dumps(doc, indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def _tradeoff_source(args):
    if args.csv:
        ds, truth = _load(args)
        return ds, truth
    return _synthetic_config(args), None


def cmd_tradeoff(args):
    source, truth = _tradeoff_source(args)
    methods = [m for m in args.methods.split(",") if m.strip()]
    try:
        rows, agg = harness.run_tradeoff(source, methods, trials=args.trials, seed=args.seed,
                                         holdout=args.holdout, truth=truth)
    except HarnessError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    _emit(harness.rows_to_csv(agg), args.out)
    if args.per_trial:
        Path(args.per_trial).write_text(harness.rows_to_csv(rows), encoding="utf-8")
    return EXIT_OK


def cmd_estimators(args):
    cfg = _synthetic_config(args)
    try:
        rows = harness.run_estimator_accuracy(cfg, trials=args.trials, seed=args.seed, K=args.K)
    except HarnessError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    _emit(harness.rows_to_csv(rows), args.out)
    return EXIT_OK


def cmd_propensity(args):
    ds, _ = _load(args)
    ps = fit_propensity(ds, max_iter=args.max_iter, tol=args.tol)
    lines = ["row,s,z"] + [f"{i},{int(s)},{z:.12g}" for i, (s, z) in enumerate(zip(ds.s, ps.z))]
    _emit("\n".join(lines) + "\n", args.out)
    print(f"AUC {ps.auc:.6f}", file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def _add_synthetic(p):
    p.add_argument("--case", choices=[c.value for c in syn.Case], default="default",
                   help="synthetic preset (default: %(default)s)")
    p.add_argument("--synthetic-config", metavar="JSON",
                   help="SyntheticConfig fields as JSON; overrides --case")
    p.add_argument("--N", type=int, help="override the number of rows")


def _add_csv(p, required):
    p.add_argument("--csv", required=required, help="input CSV with a header row")
    p.add_argument("--config", help="column mapping JSON (default: <csv stem>.truth.json)")


def build_parser():
    ap = _Parser(prog="faircee", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic CSV and its ground-truth JSON")
    _add_synthetic(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="sidecar path (default: <out stem>.truth.json)")
    p.add_argument("--no-intercept", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit", help="fit one method on a CSV and write the model JSON")
    _add_csv(p, True)
    p.add_argument("--method", required=True, help="unconstrained|single|multi:K|ipw|dr")
    p.add_argument("--out", help="model JSON path (default: stdout)")
    p.add_argument("--no-intercept", action="store_true")
    p.add_argument("--eta0", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--grad-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("tradeoff", help="loss / bias of several methods over trials")
    _add_synthetic(p)
    _add_csv(p, False)
    p.add_argument("--methods", default="single,multi:max,ipw,dr",
                   help="comma list; multi:max picks the largest feasible K")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--holdout", type=float, default=0.0, help="test fraction (default 0: in-sample)")
    p.add_argument("--out", help="aggregated CSV path (default: stdout)")
    p.add_argument("--per-trial", help="also write per-trial rows here")
    p.add_argument("--no-intercept", action="store_true")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("estimators", help="squared error of MD / Multi MD / IPW / DR")
    _add_synthetic(p)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--K", type=int, help="strata for Multi MD (default: largest feasible)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimators)

    p = sub.add_parser("propensity", help="propensity scores and AUC for a CSV")
    _add_csv(p, True)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_propensity)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FairCEEError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
