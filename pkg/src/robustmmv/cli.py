"""Command line entry point: ``robustmmv recover`` and ``robustmmv simulate``."""

import argparse
import json
import logging
import sys

from .harness import ConfigError, parse_config, run_experiment, write_outputs
from .matrix_io import MatrixFormatError, format_complex, read_matrix
from .solver import DegenerateInputError, NumericalError, SolverConfig, hub_sniht, sniht

log = logging.getLogger("robustmmv")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def _recover(args):
    try:
        Y = read_matrix(args.y)
        A = read_matrix(args.a)
    except OSError as exc:
        log.error("cannot read input: %s", exc)
        return EXIT_IO
    except MatrixFormatError as exc:
        log.error("bad matrix file: %s", exc)
        return EXIT_CONFIG
    try:
        cfg = SolverConfig(K=args.k, q_quantile=args.q, max_iter=args.max_iter,
                           rel_tol=args.tol, init_support_mode=args.init)
        solve = sniht if args.method == "sniht" else hub_sniht
        res = solve(Y, A, cfg)
    except (ValueError, NumericalError) as exc:
        kind = "degenerate input" if isinstance(exc, DegenerateInputError) else "error"
        log.error("%s: %s", kind, exc)
        return EXIT_CONFIG
    doc = {
        "method": args.method,
        "support": res.support.tolist(),
        "sigma_hat": res.sigma_hat,
        "iterations": res.iterations,
        "converged": res.converged,
        "S_hat": [[format_complex(z) for z in row] for row in res.S_hat],
    }
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        log.error("cannot write %s: %s", args.out, exc)
        return EXIT_IO
    return EXIT_OK


def _simulate(args):
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    try:
        cfg = parse_config(text)
        if args.trials is not None:
            cfg.trials = args.trials
        if args.seed is not None:
            cfg.master_seed = args.seed
        if cfg.trials < 1:
            raise ConfigError("field 'trials' must be >= 1")
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    result = run_experiment(cfg, threads=max(1, args.threads))
    try:
        write_outputs(result, args.out)
    except OSError as exc:
        log.error("cannot write outputs to %s: %s", args.out, exc)
        return EXIT_IO
    for method, per in result.per_method.items():
        print(f"{method:10s} PER={per:.3f}  warnings={result.warnings[method]}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="robustmmv",
                                     description="Robust multichannel sparse recovery")
    sub = parser.add_subparsers(dest="command", required=True)

    rec = sub.add_parser("recover", help="recover a row-sparse signal matrix")
    rec.add_argument("--y", required=True, help="measurement matrix (complex CSV)")
    rec.add_argument("--a", required=True, help="dictionary matrix (complex CSV)")
    rec.add_argument("--k", required=True, type=int, help="row sparsity")
    rec.add_argument("--method", choices=("sniht", "hub"), default="hub")
    rec.add_argument("--q", type=float, default=0.8, help="Huber threshold quantile")
    rec.add_argument("--max-iter", type=int, default=500)
    rec.add_argument("--tol", type=float, default=1e-6)
    rec.add_argument("--init", choices=("topk", "peaks"), default="topk")
    rec.add_argument("--out", required=True, help="output JSON path")
    rec.set_defaults(func=_recover)

    sim = sub.add_parser("simulate", help="run a Monte Carlo localization experiment")
    sim.add_argument("--config", required=True, help="JSON experiment config")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--trials", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--threads", type=int, default=1)
    sim.set_defaults(func=_simulate)
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
