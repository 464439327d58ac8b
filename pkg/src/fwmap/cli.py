"""Command line entry point: ``fwmap solve <instance> --type ...``."""

import argparse
import json
import logging
import sys

from .exceptions import FWMAPError
from .io import read_instance, write_trace
from .matching import build_matching_decomposition
from .mrf import encode_mrf
from .proximal import FWMAP
from .subgradient import SubgradientAscent
from .tomography import build_tomography_decomposition

log = logging.getLogger("fwmap")


def _positive(value):
    x = float(value)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return x


def build_parser():
    parser = argparse.ArgumentParser(prog="fwmap", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute a Lagrangean lower bound for an instance")
    p.add_argument("instance")
    p.add_argument("--type", choices=["mrf", "tomo", "gm"], required=True)
    p.add_argument("--solver", choices=["fwmap", "sa"], default="fwmap")
    p.add_argument("--budget-s", type=_positive, default=600.0)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prox-weight", type=_positive, default=None)
    p.add_argument("--init-vertex", choices=["min", "max"], default="min")
    p.add_argument("--fast-conv", action="store_true", help="pruned (min,+) convolution for tomography rows")
    p.add_argument("--eps-a", type=float, default=None)
    p.add_argument("--eps-b", type=float, default=None)
    p.add_argument("--clock", choices=["wall", "work"], default="wall",
                   help="'work' makes runs bit-reproducible")
    p.add_argument("--trace", default=None, help="CSV file for the per-evaluation trace")
    return parser


def decompose(instance, kind, fast_conv=False):
    if kind == "mrf":
        return encode_mrf(instance)
    if kind == "tomo":
        return build_tomography_decomposition(instance, fast=fast_conv)
    return build_matching_decomposition(instance)


def run_solve(args):
    instance = read_instance(args.instance, args.type)
    decomp = decompose(instance, args.type, args.fast_conv)
    log.info("%d terms over %d Boolean variables", decomp.num_terms, decomp.num_vars)
    if args.solver == "fwmap":
        est = FWMAP(
            prox_weight=args.prox_weight,
            budget_s=args.budget_s,
            max_iter=args.max_iter,
            seed=args.seed,
            init_vertex=args.init_vertex,
            eps_a=args.eps_a,
            eps_b=args.eps_b,
            clock=args.clock,
        )
    else:
        est = SubgradientAscent(
            max_iter=args.max_iter if args.max_iter is not None else 10**9,
            budget_s=args.budget_s,
            clock=args.clock,
        )
    est.fit(decomp)
    if args.trace:
        write_trace(est.trace_, args.trace)
    summary = {
        "solver": args.solver,
        "lower_bound": est.lower_bound_,
        "iterations": est.n_iter_,
        "terms": decomp.num_terms,
        "variables": decomp.num_vars,
    }
    if args.solver == "fwmap":
        summary.update(A=est.gap_.A, B=est.gap_.B, prox_weight=est.prox_weight_)
    print(json.dumps(summary))
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run_solve(args)
    except (FWMAPError, OSError) as exc:
        print(f"fwmap: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
