"""``polyntk`` command line.

Exit codes: 0 success, 2 bad arguments or config, 3 numerical failure.
A ``--config`` file is JSON; its top-level keys are experiment parameters
(and optionally ``seed``, ``threads``, ``out``). Flags given on the command
line override the file.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from polyntk import experiments as exp
from polyntk.dynamics import DivergenceError
from polyntk.kernels import Family, KernelModel
from polyntk.regression import (
    NumericalError,
    assemble_gram,
    fit,
    predict,
    read_dataset_csv,
)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


def _vector(text):
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"not a comma-separated vector: {text!r}") from err
    if not vals:
        raise argparse.ArgumentTypeError("empty vector")
    return np.array(vals)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from err


def _kernel_args(p, default_degree=2):
    p.add_argument("--family", choices=[f.value for f in Family], default="pnn")
    p.add_argument("--degree", type=int, default=default_degree, help="degree N (depth for mlp)")
    p.add_argument("--mc-samples", type=int, default=None, help="Monte Carlo samples (polynl only)")


def _global_flags(default):
    # Subcommands repeat the global flags with SUPPRESS defaults so a value
    # given before the subcommand is not reset by the subparser.
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=default)
    p.add_argument("--threads", type=int, default=default)
    p.add_argument("--out", default=default, help="output directory")
    p.add_argument("--config", default=default, help="JSON config file")
    return p


def build_parser():
    common = _global_flags(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(
        prog="polyntk", parents=[_global_flags(None)], description=__doc__.splitlines()[0]
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel", parents=[common], help="evaluate K(x, xp)")
    _kernel_args(p)
    p.add_argument("--x", type=_vector, required=True)
    p.add_argument("--xp", type=_vector, required=True)

    p = sub.add_parser("gram", parents=[common], help="Gram matrix of a dataset CSV")
    _kernel_args(p)
    p.add_argument("--data", required=True)

    p = sub.add_parser("fit", parents=[common], help="fit and report training residual")
    _kernel_args(p)
    p.add_argument("--data", required=True)
    p.add_argument("--jitter", type=float, default=0.0)

    p = sub.add_parser("predict", parents=[common], help="fit on --data, predict at --query rows")
    _kernel_args(p)
    p.add_argument("--data", required=True)
    p.add_argument("--query", required=True, help="CSV with header x1..xd")
    p.add_argument("--jitter", type=float, default=0.0)

    p = sub.add_parser("converge-init", parents=[common], help="empirical vs analytic NTK at init")
    p.add_argument("--degree", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--widths", type=_int_list)
    p.add_argument("--n-seeds", type=int)
    p.add_argument("--delta", type=float)

    p = sub.add_parser("stability", parents=[common], help="gradient-descent traces over widths")
    p.add_argument("--degree", type=int)
    p.add_argument("--widths", type=_int_list)
    p.add_argument("--n-seeds", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--record-ntk-every", type=int)

    p = sub.add_parser("extrapolate", parents=[common], help="ray extrapolation of PNN vs MLP kernels")
    p.add_argument("--target", choices=sorted(exp.TARGETS))
    p.add_argument("--degree", type=int)
    p.add_argument("--n-train", type=int)
    p.add_argument("--base-scale", type=float)
    p.add_argument("--h-max", type=float)

    p = sub.add_parser("exact-extrapolate", parents=[common], help="quadratic target, full vs positive support")
    p.add_argument("--dim", type=int)
    p.add_argument("--n-random", type=int)

    p = sub.add_parser("spectrum", parents=[common], help="Mercer eigenvalues and decay slopes")
    p.add_argument("--dims", type=_int_list)
    p.add_argument("--pnn-degrees", type=_int_list)
    p.add_argument("--mlp-depths", type=_int_list)
    p.add_argument("--kmax", type=int)
    p.add_argument("--nodes", type=int)

    p = sub.add_parser("spectral-bias", parents=[common], help="SGD on a harmonic mixture")
    p.add_argument("--orders", type=_int_list)
    p.add_argument("--width", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--record-every", type=int)
    return parser


EXPERIMENTS = {
    "converge-init": exp.run_converge_init,
    "stability": exp.run_stability,
    "extrapolate": exp.run_extrapolation,
    "exact-extrapolate": exp.run_exact_extrapolation,
    "spectrum": exp.run_spectrum,
    "spectral-bias": exp.run_spectral_bias,
}
GLOBAL_KEYS = ("seed", "threads", "out", "config", "command")


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise UsageError(f"cannot read config {path}: {err}") from err
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return data


def make_run_config(args):
    file_cfg = _load_config(args.config)
    params = {k: v for k, v in file_cfg.items() if k not in ("seed", "threads", "out")}
    params.update({k: v for k, v in vars(args).items() if k not in GLOBAL_KEYS and v is not None})
    seed = args.seed if args.seed is not None else int(file_cfg.get("seed", 0))
    threads = args.threads if args.threads is not None else file_cfg.get("threads")
    out = args.out if args.out is not None else file_cfg.get("out")
    return exp.RunConfig(args.command, seed, out, exp.resolve_threads(threads), params)


def _kernel_from(args, input_dim):
    seed = args.seed or 0
    return KernelModel(args.family, args.degree, input_dim, mc_samples=args.mc_samples, seed=seed)


def _read_query(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data


def _print_matrix(M):
    for row in np.atleast_2d(M):
        print(",".join(repr(float(v)) for v in row))


def _run_kernel_command(args):
    if args.command == "kernel":
        if args.x.shape != args.xp.shape:
            raise UsageError(f"--x has {args.x.size} entries, --xp has {args.xp.size}")
        value = _kernel_from(args, args.x.size)(args.x, args.xp)
        print(f"{float(value):.15g}")
        return
    data = read_dataset_csv(args.data)
    kernel = _kernel_from(args, data.X.shape[1])
    if args.command == "gram":
        _print_matrix(assemble_gram(kernel, data.X).entries)
        return
    model = fit(kernel, data, args.jitter)
    if args.command == "fit":
        resid = np.max(np.abs(predict(model, data.X) - data.y))
        print(f"n={len(data)} jitter={model.jitter!r} max_train_residual={float(resid)!r}")
        return
    query = _read_query(args.query)
    if query.shape[1] != data.X.shape[1]:
        raise UsageError(f"query has {query.shape[1]} columns, data has {data.X.shape[1]} features")
    for v in predict(model, query):
        print(repr(float(v)))


def _print_summary(summary):
    print(json.dumps(exp._jsonable(summary), indent=2, sort_keys=True, default=str))


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code == 0 else EXIT_USAGE
    try:
        if args.command in EXPERIMENTS:
            result = EXPERIMENTS[args.command](make_run_config(args))
            _print_summary(result[1])
        else:
            _run_kernel_command(args)
    except (UsageError, ValueError, OSError) as err:
        print(f"polyntk: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, DivergenceError, FloatingPointError, np.linalg.LinAlgError) as err:
        print(f"polyntk: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
