"""Command-line entry point: ``dimsc {simulate,fit,eval,experiment,validate}``.

Exit codes: 0 success, 1 usage error, 2 data or model error.
"""

import argparse
import logging
import os
import sys

from . import io
from .errors import DiMSCError
from .estimator import fit_dimsc, fit_dimsc_equivalence
from .experiments import run_experiment
from .metrics import mixed_hamming
from .model import population_matrix, prune_isolated, sample_adjacency, validate

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

log = logging.getLogger("dimsc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def build_parser():
    p = _Parser(prog="dimsc", description="Mixed-membership estimation for directed networks.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", help="sample a network from a parameter config")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    s.add_argument("--out-dir", default=".")
    s.add_argument("--validate-only", action="store_true", help="check the parameters and stop")

    f = sub.add_parser("fit", help="estimate memberships from an edge list")
    f.add_argument("--edges", required=True)
    f.add_argument("--k", type=int, required=True)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out-dir", default=".")
    f.add_argument("--equivalence", action="store_true", help="use the projector formulation")

    e = sub.add_parser("eval", help="compare estimated and true memberships")
    e.add_argument("--est", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--est-c", help="estimated column memberships (optional)")
    e.add_argument("--truth-c", help="true column memberships (optional)")

    x = sub.add_parser("experiment", help="run a simulation-study grid")
    x.add_argument("--config", required=True)
    x.add_argument("--reps", type=int, default=None, help="overrides the configured repetitions")
    x.add_argument("--seed", type=int, default=None, help="overrides the configured base seed")
    x.add_argument("--out-dir", default=None)

    v = sub.add_parser("validate", help="check a parameter config against the model conditions")
    v.add_argument("--config", required=True)
    return p


def cmd_simulate(args):
    cfg = io.load_config(args.config)
    params = io.params_from_config(cfg)
    report = validate(params)
    if args.validate_only or not report.ok:
        print(report)
        return EXIT_OK if report.ok else EXIT_DATA
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    A = sample_adjacency(population_matrix(params), seed)
    net = prune_isolated(A, params.Pi_r, params.Pi_c)
    io.write_edge_list(net.A, os.path.join(args.out_dir, "edges.tsv"))
    io.write_membership_csv(net.Pi_r, os.path.join(args.out_dir, "true_r.csv"))
    io.write_membership_csv(net.Pi_c, os.path.join(args.out_dir, "true_c.csv"))
    print(f"wrote {net.A.shape[0]}x{net.A.shape[1]} network with {net.A.nnz} edges to {args.out_dir}")
    return EXIT_OK


def cmd_fit(args):
    A = io.read_edge_list(args.edges)
    fit = fit_dimsc_equivalence if args.equivalence else fit_dimsc
    est = fit(A, args.k, seed=args.seed)
    io.write_memberships(est, args.out_dir)
    print(f"I_r={list(est.I_r_hat)} I_c={list(est.I_c_hat)}; results in {args.out_dir}")
    return EXIT_OK


def cmd_eval(args):
    if (args.est_c is None) != (args.truth_c is None):
        raise UsageError("--est-c and --truth-c must be given together")
    value, perm = mixed_hamming(io.read_membership_csv(args.est), io.read_membership_csv(args.truth))
    print(f"mhamm: {io.fmt(value)}")
    print(f"best_perm: {list(perm)}")
    if args.est_c is not None:
        value_c, perm_c = mixed_hamming(io.read_membership_csv(args.est_c), io.read_membership_csv(args.truth_c))
        print(f"col_mhamm: {io.fmt(value_c)}")
        print(f"best_perm_c: {list(perm_c)}")
    return EXIT_OK


def cmd_experiment(args):
    cfg = io.load_config(args.config)
    config = io.experiment_from_config(cfg)
    if args.reps is not None:
        config.repetitions = args.reps
    if args.seed is not None:
        config.base_seed = args.seed
    config.__post_init__()
    stem = os.path.splitext(os.path.basename(args.config))[0]
    if args.out_dir is not None:
        out = os.path.join(args.out_dir, os.path.basename(cfg.get("output") or f"{stem}_results.csv"))
    else:
        out = cfg.get("output") or os.path.join(os.path.dirname(os.path.abspath(args.config)), f"{stem}_results.csv")
    result = run_experiment(config)
    io.write_experiment_csv(result, out)
    failed = sum(s.reps_failed for s in result.summaries)
    print(f"wrote {len(result.summaries)} rows to {out} ({failed} failed repetitions)")
    return EXIT_OK


def cmd_validate(args):
    report = validate(io.params_from_config(io.load_config(args.config)))
    print(report)
    return EXIT_OK if report.ok else EXIT_DATA


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "eval": cmd_eval,
            "experiment": cmd_experiment, "validate": cmd_validate}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            raise UsageError("dimsc: error: a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DiMSCError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
