"""Command-line interface.

Subcommands: ``estimate``, ``significance``, ``simulate``, ``ranking``,
``region``, ``theory-check``. Exit status is 0 on success, 2 for invalid
arguments or configuration, 3 for data problems.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .data_io import build_event_dataset, load_csv, load_long_csv, read_event_times
from .errors import DataError, DrAteError, ValidationError
from .estimators import METHODS, estimate_mcm, estimate_mlr, estimate_slr
from .monte_carlo import STANDARD, McConfig, ranking_sweep, run_monte_carlo, theory_vs_empirical
from .significance import significance
from .synthetic import FAMILIES, SyntheticModelSpec, load_default_spec
from .variance_theory import delta_sign_region, region_to_csv

EXIT_OK, EXIT_VALIDATION, EXIT_DATA = 0, 2, 3
ALPHAS = (0.05, 0.01)
DEFAULT_N = "250,500,1000,2000,4000"
DEFAULT_REPS = 10000


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _methods(text):
    out = [m.strip().lower() for m in text.split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {','.join(METHODS)}")
    return out


def _sci(p):
    """``2.7e-7`` style, two significant digits."""
    if p == 0:
        return "0"
    mant, exp = f"{p:.1e}".split("e")
    return f"{mant}e{int(exp)}"


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("DR_ATE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"DR_ATE_SEED must be an integer, got {env!r}") from None
    return 0


def _emit(text, args):
    if not text.endswith("\n"):
        text += "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj):
    return json.dumps(obj, indent=2, allow_nan=False)


def _table(header, rows):
    cells = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- data loading ------------------------------------------------------------


def _load_dataset(args):
    if args.input and args.long_input:
        raise ValidationError("use either --input or --long-input, not both")
    covs = [c for c in args.covariates.split(",") if c] if args.covariates else None
    if args.input:
        return load_csv(args.input, args.y_col, args.t_col, covs), None
    if args.long_input:
        if not args.events:
            raise ValidationError("--long-input needs --events")
        records, names = load_long_csv(args.long_input, covs)
        events = read_event_times(args.events)
        return build_event_dataset(records, events, names)
    raise ValidationError("an input file is required (--input or --long-input)")


def _estimates(dataset, methods, mcm_center):
    funcs = {"slr": estimate_slr, "mlr": estimate_mlr,
             "mcm": lambda ds: estimate_mcm(ds, center=mcm_center)}
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for m in methods:
            out.append(funcs[m](dataset))
    return out


def _input_meta(args, dataset, report):
    meta = {
        "input": args.input or args.long_input,
        "n": dataset.n,
        "d": dataset.d,
        "treated": dataset.n_treated,
        "covariates": list(dataset.column_names),
    }
    if report is not None:
        meta["drop_report"] = report.to_dict()
    return meta


def cmd_estimate(args):
    dataset, report = _load_dataset(args)
    ests = _estimates(dataset, args.method, args.mcm_center)
    if args.format == "json":
        return _dumps({"schema": 1, "kind": "estimate", **_input_meta(args, dataset, report),
                       "estimates": [e.to_dict() for e in ests]})
    rows = [[e.method, repr(e.ate_hat), repr(e.p_hat), e.n] for e in ests]
    if args.format == "csv":
        return _csv(["method", "ate_hat", "p_hat", "n"], rows)
    rows = [[e.method.upper(), f"{e.ate_hat:.6g}", f"{e.p_hat:.4f}", e.n] for e in ests]
    return _table(["method", "ATE", "p", "n"], rows)


def cmd_significance(args):
    dataset, report = _load_dataset(args)
    ests = _estimates(dataset, args.method, args.mcm_center)
    reps = [significance(e) for e in ests]
    if args.format == "json":
        items = []
        for e, r in zip(ests, reps):
            d = r.to_dict()
            d["ate_hat"] = e.ate_hat
            d["t_significant"] = {str(a): r.t_p_value < a for a in ALPHAS}
            d["f_significant"] = {str(a): r.f_p_value < a for a in ALPHAS}
            items.append(d)
        return _dumps({"schema": 1, "kind": "significance", **_input_meta(args, dataset, report),
                       "alpha_levels": list(ALPHAS), "tests": items})
    if args.format == "csv":
        return _csv(
            ["method", "ate_hat", "t_statistic", "t_p_value", "f_statistic", "f_p_value",
             "dof_model", "dof_residual"],
            [[r.method, repr(e.ate_hat), repr(r.t_statistic), repr(r.t_p_value),
              repr(r.f_statistic), repr(r.f_p_value), r.dof_model, r.dof_residual]
             for e, r in zip(ests, reps)],
        )
    rows = []
    for e, r in zip(ests, reps):
        stars = "".join("*" for a in ALPHAS if r.t_p_value < a)
        rows.append([r.method.upper(), f"{e.ate_hat:.4g}", _sci(r.t_p_value) + stars,
                     _sci(r.f_p_value), f"{r.dof_model}/{r.dof_residual}"])
    text = _table(["method", "ATE", "p-value (t)", "p-value (F)", "dof"], rows)
    return text + "\n* p < 0.05, ** p < 0.01"


def _spec_from_args(args):
    if getattr(args, "spec_file", None):
        spec = SyntheticModelSpec.load(args.spec_file)
    else:
        spec = load_default_spec(args.family)
    if getattr(args, "p", None) is not None:
        spec = spec.with_p(args.p)
    return spec


def cmd_simulate(args):
    spec = _spec_from_args(args)
    cfg = McConfig(spec, tuple(args.n), args.reps, _seed(args), tuple(args.estimators),
                   args.mcm_centering, args.workers)
    rep = run_monte_carlo(cfg)
    if args.format == "json":
        return rep.to_json()
    if args.format == "csv":
        return rep.to_csv()
    rows = [[e.estimator.upper(), e.n, f"{e.error_variance:.4g}", f"{e.variance:.4g}",
             f"{e.bias:+.3g}", e.failures] for e in rep.entries]
    return _table(["method", "n", "Var(err)", "Var(est)", "bias", "failed"], rows)


def cmd_ranking(args):
    spec = _spec_from_args(args)
    rows = ranking_sweep(spec, args.p_values, args.n, args.reps, _seed(args),
                         args.workers, args.mcm_centering)
    if args.format == "json":
        return _dumps({"schema": 1, "kind": "ranking", "family": spec.family, "n": args.n,
                       "replications": args.reps, "master_seed": _seed(args),
                       "rows": [r.to_dict() for r in rows]})
    if args.format == "csv":
        return _csv(["p", "best", "medium", "worst", "var_slr", "var_mlr", "var_mcm"],
                    [[repr(r.p), *r.ranking.as_tuple(),
                      *(repr(r.error_variances[m]) for m in STANDARD)] for r in rows])
    return _table(["p", "best", "medium", "worst"],
                  [[f"{r.p:g}", *(m.upper() for m in r.ranking.as_tuple())] for r in rows])


def cmd_region(args):
    if args.p_steps < 1 or args.k_steps < 1:
        raise ValidationError("--p-steps and --k-steps must be positive")
    if args.k_steps > 1 and not args.k_max > args.k_min:
        raise ValidationError("--k-max must exceed --k-min")
    p_grid = np.arange(1, args.p_steps + 1) / (args.p_steps + 1)
    k_grid = np.linspace(args.k_min, args.k_max, args.k_steps)
    signs = delta_sign_region(p_grid, k_grid)
    if args.format == "json":
        return _dumps({"schema": 1, "kind": "region", "p": p_grid.tolist(), "k": k_grid.tolist(),
                       "signs": signs.astype(int).tolist()})
    if args.format == "table":
        chars = {-1: "-", 0: "0", 1: "+"}
        return "\n".join(f"{k:+7.3f} " + "".join(chars[int(s)] for s in row)
                         for k, row in zip(k_grid, signs))
    return region_to_csv(signs, p_grid, k_grid)


def cmd_theory_check(args):
    spec = _spec_from_args(args)
    p = spec.p
    comps, _ = theory_vs_empirical(spec, p, args.n, args.reps, _seed(args),
                                   args.workers, args.mcm_centering)
    if args.format == "json":
        return _dumps({"schema": 1, "kind": "theory_check", "family": spec.family, "p": p,
                       "n": args.n, "replications": args.reps, "master_seed": _seed(args),
                       "mcm_centering": args.mcm_centering,
                       "comparisons": [c.to_dict() for c in comps]})

    def fmt(v):
        return "n/a" if v is None else f"{v:.4g}"

    rows = [[c.estimator.upper(), fmt(c.nominal), fmt(c.empirical), fmt(c.relative_error)]
            for c in comps]
    if args.format == "csv":
        return _csv(["estimator", "nominal", "empirical", "relative_error"],
                    [[c.estimator, c.nominal, repr(c.empirical), c.relative_error] for c in comps])
    return _table(["method", "nominal", "empirical", "rel. error"], rows)


# -- parser --------------------------------------------------------------------


def _add_output(p, default="json"):
    p.add_argument("--format", choices=("json", "csv", "table"), default=default,
                   help=f"output format (default {default})")
    p.add_argument("--output", "-o", help="write to this file instead of stdout")


def _add_data_input(p):
    g = p.add_argument_group("input")
    g.add_argument("--input", "-i", help="wide CSV: outcome, treatment, covariates")
    g.add_argument("--y-col", default="y", help="outcome column (default y)")
    g.add_argument("--t-col", default="t", help="treatment column, 0/1 (default t)")
    g.add_argument("--covariates", help="comma-separated covariate columns (default: all others)")
    g.add_argument("--long-input", help="long CSV: user_id,timestamp,consumption,covariates...")
    g.add_argument("--events", help="file of event timestamps (one ISO-8601 date-hour per line)")
    p.add_argument("--method", type=_methods, default=list(METHODS),
                   help="comma-separated estimators among slr,mlr,mcm (default all)")
    p.add_argument("--mcm-center", type=float, default=None,
                   help="known assignment probability used to center MCM (default: treated fraction)")


def _add_model(p, default_family):
    p.add_argument("--family", choices=FAMILIES, default=default_family,
                   help=f"shipped synthetic model (default {default_family})")
    p.add_argument("--spec-file", help="model config file; overrides --family")


def _add_mc(p, n_default, n_type):
    p.add_argument("--n", type=n_type, default=n_type(n_default), help=f"sample size (default {n_default})")
    p.add_argument("--reps", type=int, default=DEFAULT_REPS,
                   help=f"replications (default {DEFAULT_REPS})")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed (default: $DR_ATE_SEED, else 0)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")


def build_parser():
    parser = _Parser(prog="dr-ate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("estimate", help="ATE estimates from a dataset")
    _add_data_input(p)
    _add_output(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("significance", help="t and F test p-values per estimator")
    _add_data_input(p)
    _add_output(p)
    p.set_defaults(func=cmd_significance)

    p = sub.add_parser("simulate", help="Monte Carlo variance of the estimators")
    _add_model(p, "14b")
    p.add_argument("--p", type=float, help="assignment probability (default: the model's)")
    _add_mc(p, DEFAULT_N, _int_list)
    p.add_argument("--estimators", type=_methods, default=list(STANDARD),
                   help="comma-separated estimators (default slr,mlr,mcm)")
    p.add_argument("--mcm-centering", choices=("empirical", "design"), default="empirical",
                   help="center MCM on the treated fraction or on p (default empirical)")
    _add_output(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ranking", help="estimator ranking across assignment probabilities")
    _add_model(p, "28")
    p.add_argument("--p-values", type=_float_list,
                   default=[round(0.1 * i, 1) for i in range(1, 10)],
                   help="comma-separated p values (default 0.1,...,0.9)")
    _add_mc(p, "1000", int)
    p.add_argument("--mcm-centering", choices=("empirical", "design"), default="empirical")
    _add_output(p, "table")
    p.set_defaults(func=cmd_ranking)

    p = sub.add_parser("region", help="sign of the SLR-minus-MLR variance gap on a (p, k) grid")
    p.add_argument("--p-steps", type=int, default=99, help="interior p points i/(steps+1) (default 99)")
    p.add_argument("--k-min", type=float, default=-2.0)
    p.add_argument("--k-max", type=float, default=2.0)
    p.add_argument("--k-steps", type=int, default=81)
    _add_output(p, "csv")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("theory-check", help="nominal versus simulated variances")
    _add_model(p, "14b")
    p.add_argument("--p", type=float, help="assignment probability (default: the model's)")
    _add_mc(p, "2000", int)
    p.add_argument("--mcm-centering", choices=("empirical", "design"), default="design",
                   help="MCM centering used in the simulation and formula (default design)")
    _add_output(p, "table")
    p.set_defaults(func=cmd_theory_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _emit(args.func(args), args)
    except ValidationError as exc:
        print(f"dr-ate {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DataError, OSError) as exc:
        print(f"dr-ate {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DrAteError as exc:
        print(f"dr-ate {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
