"""Command line entry point: ``slope fit | gen | bench``.

Exit codes: 0 on success, 1 for bad input, 2 when the solver failed at
every path step.
"""
import argparse
import json
import logging
import sys

import numpy as np

from .datasets import DataFormatError, GenSpec, generate, read_csv, read_libsvm, write_csv
from .objectives import FAMILIES, standardize
from .path import PathConfig, fit_path
from .solver import SolverConfig

EXIT_OK, EXIT_BAD_INPUT, EXIT_SOLVER = 0, 1, 2

log = logging.getLogger("slopescreen")


def _cmd_fit(args):
    if args.format == "csv":
        design, response = read_csv(args.data, args.response_column, args.family)
    else:
        design, response = read_libsvm(args.data, args.family)
    design, response = standardize(design, response)
    cfg = PathConfig(q=args.q, length=args.path_length, screening=args.screening,
                     driver=args.driver, early_stop=not args.no_early_stop,
                     solver=SolverConfig(gap_tol=args.gap_tol, infeas_tol=args.infeas_tol,
                                         max_iterations=args.max_iterations))
    res = fit_path(design, response, cfg)
    out = {
        "family": response.family,
        "n": res.n,
        "p": res.p,
        "n_classes": res.n_classes,
        "seed": args.seed,
        "config": {"q": cfg.q, "length": cfg.length, "screening": cfg.screening,
                   "driver": cfg.driver, "gap_tol": args.gap_tol,
                   "infeas_tol": args.infeas_tol},
        "standardized_sparse": design.is_sparse,
        "column_centers": design.column_centers.tolist(),
        "column_scales": design.column_scales.tolist(),
        "lambda": res.lam.tolist(),
        "termination": res.termination,
        "steps": [{"sigma": s.sigma, "active": s.active, "screened": s.screened,
                   "violations": s.violations, "refits": s.refits,
                   "deviance_ratio": s.deviance_ratio, "gap": s.gap,
                   "infeasibility": s.infeasibility, "converged": s.converged,
                   "time": s.time, "beta": s.beta.tolist()} for s in res.steps],
    }
    with open(args.out, "w") as fh:
        json.dump(out, fh)
    log.info("wrote %d path steps to %s", len(res.steps), args.out)


def _cmd_gen(args):
    scheme = args.beta_scheme
    if scheme is None:
        scheme = "multinomial_rowscatter" if args.family == "multinomial" else "gaussian_unit"
    spec = GenSpec(n=args.n, p=args.p, k=args.k, rho=args.rho, design_kind=args.design,
                   family=args.family, beta_scheme=scheme, noise_scale=args.noise_scale,
                   seed=args.seed)
    design, response, _ = generate(spec)
    write_csv(args.out, design, response)
    log.info("wrote %dx%d design to %s", args.n, args.p, args.out)


def _cmd_bench(args):
    from .bench import bench_run, load_bench_config

    cells, replicates, workers = load_bench_config(args.config)
    if args.replicates is not None:
        replicates = args.replicates
    records = bench_run(cells, replicates, args.out, workers=args.workers or workers)
    failed = sum(r.termination == "failed" for r in records)
    log.info("%d runs, %d failed; results in %s", len(records), failed, args.out)


def build_parser():
    parser = argparse.ArgumentParser(prog="slope", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a SLOPE regularization path")
    fit.add_argument("--data", required=True)
    fit.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    fit.add_argument("--response-column", default="y")
    fit.add_argument("--family", choices=FAMILIES, default="gaussian")
    fit.add_argument("--q", type=float, default=0.1)
    fit.add_argument("--path-length", type=int, default=100)
    fit.add_argument("--screening", choices=("none", "strong"), default="strong")
    fit.add_argument("--driver", choices=("strong-set", "previous-set"), default="strong-set")
    fit.add_argument("--gap-tol", type=float, default=1e-5)
    fit.add_argument("--infeas-tol", type=float, default=1e-3)
    fit.add_argument("--max-iterations", type=int, default=100_000)
    fit.add_argument("--no-early-stop", action="store_true")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=_cmd_fit)

    gen = sub.add_parser("gen", help="generate a synthetic data set as CSV")
    gen.add_argument("--design", choices=("equicorrelated", "ar-chain"),
                     default="equicorrelated")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--p", type=int, required=True)
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--rho", type=float, default=0.0)
    gen.add_argument("--family", choices=FAMILIES, default="gaussian")
    gen.add_argument("--beta-scheme", default=None)
    gen.add_argument("--noise-scale", type=float, default=None)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=_cmd_gen)

    bench = sub.add_parser("bench", help="run a benchmark matrix from a TOML file")
    bench.add_argument("--config", required=True)
    bench.add_argument("--out", required=True)
    bench.add_argument("--replicates", type=int, default=None)
    bench.add_argument("--workers", type=int, default=None)
    bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_BAD_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with np.errstate(over="ignore"):
            args.func(args)
    except RuntimeError as exc:
        print("slope: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, ValueError, DataFormatError) as exc:
        print("slope: %s" % exc, file=sys.stderr)
        return EXIT_BAD_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
