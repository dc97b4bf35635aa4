"""Command-line entry point: ``bridgemix <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .harness import io
from .harness.chain import ChainConfig, run_chains
from .harness.diagnostics import diagnostics, summarize
from .harness.experiments import METHODS, estimation_experiment, prediction_experiment, simulate_sparse, format_estimation_table
from .model import DataError, HyperPrior, NumericalError

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3


def _alpha(text):
    if text == "sample":
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'sample', got {text!r}") from None


def _chain_args(p):
    p.add_argument("--method", choices=("triangle", "stable", "auto"), default="auto")
    p.add_argument("--alpha", type=_alpha, default=0.5, help="fixed value in (0, 1] or 'sample'")
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--burnin", type=int, default=1000)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--tau", type=float, default=None, help="hold tau fixed at this value")
    p.add_argument("--nu-prior", type=float, nargs=2, default=(2.0, 2.0), metavar=("SHAPE", "RATE"))
    p.add_argument("--out", type=Path, default=Path("out"))


def _config(args):
    return ChainConfig(
        method=args.method, iterations=args.iters, burn_in=args.burnin, thin=args.thin,
        seed=args.seed, alpha=args.alpha, chains=args.chains, tau=args.tau,
        hyper=HyperPrior(*args.nu_prior),
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="bridgemix", description="Bayesian bridge regression samplers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run chains on a CSV data set")
    p.add_argument("data", type=Path)
    p.add_argument("--response", default="y")
    p.add_argument("--no-standardize", action="store_true")
    _chain_args(p)

    p = sub.add_parser("predict-exp", help="repeated train/test prediction experiment")
    p.add_argument("--data", type=Path, default=None, help="CSV; simulated sparse data when omitted")
    p.add_argument("--response", default="y")
    p.add_argument("--splits", type=int, default=20)
    p.add_argument("--methods", nargs="+", default=["ols", "classical", "bayes_fixed_alpha"], choices=METHODS)
    _chain_args(p)

    p = sub.add_parser("estimate-exp", help="coefficient-estimation experiment on factor designs")
    p.add_argument("--alpha-true", type=float, nargs="+", default=[0.5])
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--scale", choices=("desk", "full"), default="desk")
    _chain_args(p)

    p = sub.add_parser("diagnose", help="ACF and ESS of a draws file")
    p.add_argument("draws", type=Path)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("summarize", help="posterior summaries and marginal density grids")
    p.add_argument("draws", type=Path)
    p.add_argument("--data", type=Path, default=None, help="CSV the draws were fitted to")
    p.add_argument("--response", default="y")
    p.add_argument("--grid-size", type=int, default=201)
    p.add_argument("--out", type=Path, default=None)
    return parser


def _load_store(path):
    """Draws file plus the ``run.json`` written beside it, when present."""
    table = io.read_draws(path)
    meta_path = path.parent / "run.json"
    if meta_path.is_file():
        meta = io.read_report(meta_path)
        config, method = ChainConfig.from_dict(meta["config"]), meta["method"]
    else:
        config, method = ChainConfig(iterations=table["iteration"].size + 1, burn_in=1), "unknown"
    return io.store_from_table(table, config, method)


def _emit(report, out, name):
    text = io.dumps_report(report)
    if out is None:
        sys.stdout.write(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")


def cmd_run(args):
    data = io.load_csv(args.data, args.response, standardize_X=not args.no_standardize)
    config = _config(args)
    stores = run_chains(data, config)
    args.out.mkdir(parents=True, exist_ok=True)
    for s in stores:
        io.write_draws(s, args.out / f"draws_chain{s.chain}.csv")
    meta = dict(stores[0].metadata())
    meta["chains"] = [s.metadata() for s in stores]
    io.write_report(meta, args.out / "run.json")
    print(f"wrote {len(stores)} chain(s) using the {stores[0].method} sampler to {args.out}")


def cmd_predict(args):
    if args.data is not None:
        header, values = io.read_table(args.data)
        if args.response not in header:
            raise io.MissingResponseError(f"response column {args.response!r} not found")
        k = header.index(args.response)
        X, y = np.delete(values, k, axis=1), values[:, k]
    else:
        X, y, _ = simulate_sparse(20, 100, 4, args.seed)
    alpha = 0.5 if args.alpha == "sample" else args.alpha
    rep = prediction_experiment(X, y, args.splits, args.methods, _config(args), alpha=alpha, seed=args.seed)
    _emit(rep, args.out, "prediction.json")
    for m, s in rep["summary"].items():
        print(f"{m:>20}: median test SSE {s['median_sse_raw']:.4g}")


def cmd_estimate(args):
    reports = [estimation_experiment(a, args.replicates, args.scale, _config(args), args.seed)
               for a in args.alpha_true]
    _emit({"kind": "estimation_table", "rows": reports}, args.out, "estimation.json")
    print(format_estimation_table(reports))


def cmd_diagnose(args):
    rep = diagnostics(_load_store(args.draws))
    _emit(rep, args.out, "diagnostics.json")


def cmd_summarize(args):
    store = _load_store(args.draws)
    data = io.load_csv(args.data, args.response) if args.data is not None else None
    rep = summarize(store, data, grid_size=args.grid_size)
    _emit(rep, args.out, "summary.json")


COMMANDS = {"run": cmd_run, "predict-exp": cmd_predict, "estimate-exp": cmd_estimate,
            "diagnose": cmd_diagnose, "summarize": cmd_summarize}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except DataError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
