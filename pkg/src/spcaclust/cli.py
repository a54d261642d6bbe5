"""Command-line entry point.

Exit codes: 0 success, 2 configuration or validation error, 3 pipeline
error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import bench, fisher, selftest
from .errors import InvalidConfig, PipelineError, SpcaClustError
from .spca import InitializerSpec, PenaltyParams, SpcaParams

EXIT_OK, EXIT_CONFIG, EXIT_PIPELINE, EXIT_IO = 0, 2, 3, 4

# flag dest -> ExperimentConfig field
_SIM_FLAGS = {
    "n": "n", "p": "p", "k": "K", "r": "r_values", "v": "v_values", "reps": "n_reps",
    "seed": "seed", "beta": "beta", "delta": "delta", "alpha": "alpha", "s_prime": "s_prime",
    "init": "init", "method": "method", "threads": "threads", "out": "out", "format": "format",
    "normalize": "normalize", "tau": "tau", "calibration": "calibration", "on_empty": "on_empty",
    "restarts": "restarts",
}


def _add_spca_flags(p: argparse.ArgumentParser):
    p.add_argument("--beta", type=float, help="penalty scale (default 1)")
    p.add_argument("--delta", type=float, help="penalty inflation (default 0.2)")
    p.add_argument("--alpha", type=float, help="diagonal-threshold margin (default 1)")
    p.add_argument("--s-prime", type=int, help="column-screen size")
    p.add_argument("--init", choices=["diag", "screen"])
    p.add_argument("--restarts", type=int, help="k-means restarts (default 10)")
    p.add_argument("--on-empty", choices=["raise", "initial"],
                   help="what to do when penalized selection keeps too few rows")
    p.add_argument("--normalize", choices=["center", "center-scale"])
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spcaclust", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the synthetic (r, v) grid")
    sim.add_argument("--config", help="JSON file with ExperimentConfig keys; flags override it")
    sim.add_argument("--n", type=int)
    sim.add_argument("--p", type=int)
    sim.add_argument("--k", type=int)
    sim.add_argument("--r", type=float, action="append", help="signal exponent (repeatable)")
    sim.add_argument("--v", type=float, action="append", help="sparsity exponent (repeatable)")
    sim.add_argument("--reps", type=int)
    sim.add_argument("--method", choices=["spca", "pca", "both"])
    sim.add_argument("--threads", type=int)
    sim.add_argument("--out")
    sim.add_argument("--format", choices=["csv", "markdown"])
    sim.add_argument("--tau", type=float, help="override the per-feature mean gap")
    sim.add_argument("--calibration", choices=["sqrt", "detection"])
    sim.add_argument("--no-timing", action="store_true", help="write 0 in the seconds column")
    _add_spca_flags(sim)

    cl = sub.add_parser("cluster", help="cluster a CSV file (rows are samples)")
    cl.add_argument("path")
    cl.add_argument("--k", type=int, required=True)
    cl.add_argument("--labels", metavar="COLUMN", help="ground-truth label column (name or 0-based index)")
    cl.add_argument("--has-labels", action="store_true", help="last column holds ground-truth labels")
    cl.add_argument("--out", help="write predicted labels here")
    _add_spca_flags(cl)

    fd = sub.add_parser("fisher-demo", help="full versus screened oracle Fisher rule")
    fd.add_argument("--rho", type=float, default=0.6, help="equicorrelation of the noise")
    fd.add_argument("--dim", type=int, default=2, help="number of features")
    fd.add_argument("--contrast", default="1,0", help="comma-separated mean difference")
    fd.add_argument("--split", type=int, default=1, help="size of the useful leading block")
    fd.add_argument("--draws", type=int, default=1_000_000)
    fd.add_argument("--seed", type=int, default=0)

    st = sub.add_parser("selftest", help="run built-in oracle checks")
    st.add_argument("--seed", type=int, default=0)
    return parser


def _experiment_config(args) -> bench.ExperimentConfig:
    config = bench.ExperimentConfig.from_json(args.config) if args.config else bench.ExperimentConfig()
    for flag, name in _SIM_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, name, value)
    if args.no_timing:
        config.timing = False
    return config.validate()


def cmd_simulate(args) -> int:
    config = _experiment_config(args)
    table = bench.run_grid(config, write=False)
    if config.out:
        bench.write_report(table, config.out, config.format)
    else:
        sys.stdout.write(bench.emit_report(table, config.format))
    return EXIT_OK


def cmd_cluster(args) -> int:
    if not Path(args.path).is_file():
        raise FileNotFoundError(f"{args.path}: no such file")
    if args.init == "screen" or (args.init is None and args.s_prime is not None):
        if args.s_prime is None:
            raise InvalidConfig("--init screen needs --s-prime for real data")
        init = InitializerSpec.screen(args.s_prime)
    else:
        init = InitializerSpec.diagonal(1.0 if args.alpha is None else args.alpha)
    params = SpcaParams(
        K=args.k,
        penalty=PenaltyParams(1.0 if args.beta is None else args.beta, 0.2 if args.delta is None else args.delta),
        init=init,
        kmeans_restarts=args.restarts or 10,
        seed=args.seed or 0,
        on_empty=args.on_empty or "initial",
    )
    outcome = bench.cluster_file(
        args.path, args.k, params,
        normalize_mode=args.normalize or "center",
        has_labels=args.has_labels or args.labels is not None,
        label_column=args.labels,
        out=args.out,
    )
    if args.out is None:
        sys.stdout.write(bench.format_labels(outcome.labels))
    if outcome.report is not None:
        print(f"hamming={outcome.report.hamming} rate={outcome.report.rate:.6f}", file=sys.stderr)
    return EXIT_OK


def cmd_fisher_demo(args) -> int:
    delta = np.array([float(x) for x in args.contrast.split(",")])
    if delta.size != args.dim:
        raise InvalidConfig(f"--contrast has {delta.size} entries, --dim is {args.dim}")
    Sigma = fisher.equicorrelated(args.rho, args.dim)
    gap = fisher.subset_vs_full_gap(delta, Sigma, args.split)
    params = fisher.OracleParams(np.zeros(args.dim), delta / 2, -delta / 2, Sigma)
    full = fisher.empirical_misclassification(params, None, args.draws, args.seed)
    subset = fisher.empirical_misclassification(params, args.split, args.draws, args.seed)
    se = math.sqrt(full * (1 - full) / args.draws + subset * (1 - subset) / args.draws)
    print(f"quad_form_full      {gap.full:.12f}")
    print(f"quad_form_subset    {gap.subset:.12f}")
    print(f"gap                 {gap.gap:.12f}")
    print(f"rate_unhalved_full  {fisher.fisher_rate_unhalved(delta, Sigma):.6f}")
    print(f"rate_unhalved_subset {fisher.fisher_rate_unhalved(delta[:args.split], Sigma[:args.split, :args.split]):.6f}")
    print(f"rate_std_full       {fisher.fisher_rate_standard(delta, Sigma):.6f}")
    print(f"rate_std_subset     {fisher.fisher_rate_standard(delta[:args.split], Sigma[:args.split, :args.split]):.6f}")
    print(f"mc_full             {full:.6f}")
    print(f"mc_subset           {subset:.6f}")
    print(f"mc_difference       {subset - full:.6f}  ({(subset - full) / se:.1f} standard errors)")
    return EXIT_OK


def cmd_selftest(args) -> int:
    return EXIT_OK if selftest.run(args.seed) else EXIT_PIPELINE


COMMANDS = {
    "simulate": cmd_simulate,
    "cluster": cmd_cluster,
    "fisher-demo": cmd_fisher_demo,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except (SpcaClustError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
