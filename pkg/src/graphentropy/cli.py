"""Command-line front end: validation, lemma sweeps, level-sum series, entropy bounds.

Conventions: angles are degrees in input files and radians in CSV output;
all commands are deterministic for fixed flags.  Exit codes: 0 success /
bound certified, 1 invariant violation, 2 parse error, 3 truncation too
coarse to certify a bound above 1.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import entropy as en
from . import local_estimate as le
from . import manifold as mf
from . import walltree as wt

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_TOO_COARSE = 3


def _load(path):
    return mf.load_manifold(path)


def _write_out(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        print("wrote %s" % out, file=sys.stderr)
    else:
        sys.stdout.write(text)


def cmd_validate(args):
    try:
        spec = _load(args.input)
    except mf.ManifoldParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE
    report = mf.validate(spec)
    print(report)
    return EXIT_OK if report.valid else EXIT_INVALID


def _validated(args):
    spec = _load(args.input)
    report = mf.validate(spec)
    if not report.valid:
        print(report, file=sys.stderr)
        raise SystemExit(EXIT_INVALID)
    return spec


def cmd_lemma_sweep(args):
    try:
        spec = _validated(args)
    except mf.ManifoldParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE
    tables = []
    for block in spec.blocks:
        grids = le.default_grids(block.surface, alpha0=spec.alpha_0)
        tables.append(le.lemma_sweep(block.surface, *grids, eps=args.eps,
                                     depth_cap=args.depth_cap))
    csv = tables[0].to_csv()
    for t in tables[1:]:
        csv += "".join(t.to_csv().splitlines(keepends=True)[1:])
    _write_out(csv, args.out)
    lam0 = min(t.lambda0_hat for t in tables)
    print("lambda0_hat = %.12g" % lam0, file=sys.stderr)
    return EXIT_OK


def cmd_series(args):
    try:
        spec = _validated(args)
    except mf.ManifoldParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE
    root_block = args.root_block or spec.blocks[0].block_id
    root_class = (
        args.root_class
        if args.root_class is not None
        else spec.blocks[0].surface.boundary_classes[0].class_id
    )
    summaries, _ = wt.build_levels(
        spec,
        root_block,
        root_class,
        n_max=args.n,
        eps=args.eps,
        beam=args.beam,
        t_values=tuple(args.t),
        depth_cap=args.depth_cap,
        scale_eps=args.scale_eps,
    )
    _write_out(wt.levels_to_csv(summaries), args.out)
    for prev, cur in zip(summaries, summaries[1:]):
        if 1.0 in cur.p_hat and prev.p_hat.get(1.0, 0.0) > 0:
            print(
                "P_%d/P_%d at t=1: %.6f"
                % (cur.n, prev.n, cur.p_hat[1.0] / prev.p_hat[1.0]),
                file=sys.stderr,
            )
    return EXIT_OK


def cmd_entropy_bound(args):
    try:
        spec = _validated(args)
    except mf.ManifoldParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE
    report = en.best_bound(
        spec,
        n_list=tuple(args.n_list),
        h_lo=args.h_min,
        h_hi=args.h_max,
        eps=args.eps,
        beam=args.beam,
        config_budget=args.config_budget,
        depth_cap=args.depth_cap,
    )
    _write_out(report.to_json() + "\n", args.out)
    print(report.text_summary(), file=sys.stderr)
    if report.h_bar <= args.h_min:
        return EXIT_TOO_COARSE
    return EXIT_OK


def _positive(value):
    v = float(value)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser():
    p = argparse.ArgumentParser(
        prog="graphentropy",
        description="volume-entropy lower bounds for graph manifolds",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, beam_default=None):
        sp.add_argument("input", help="manifold description (JSON)")
        sp.add_argument("--eps", type=_positive, default=1e-3,
                        help="angular cutoff for wall enumeration")
        sp.add_argument("--depth-cap", type=int, default=64)
        sp.add_argument("--beam", type=int, default=beam_default,
                        help="retain only this many smallest-length nodes per level")
        sp.add_argument("--out", default=None, help="output file (default stdout)")

    sp = sub.add_parser("validate", help="parse and check a manifold file")
    sp.add_argument("input")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("lemma-sweep", help="gain functional over default grids")
    common(sp)
    sp.set_defaults(func=cmd_lemma_sweep)

    sp = sub.add_parser("series", help="wall-tree level sums")
    common(sp, beam_default=100_000)
    sp.add_argument("--n", type=int, default=3, help="deepest level")
    sp.add_argument("--t", type=float, action="append", default=None,
                    help="series exponent(s); repeatable (default 1.0)")
    sp.add_argument("--root-block", default=None)
    sp.add_argument("--root-class", type=int, default=None)
    sp.add_argument("--scale-eps", action="store_true",
                    help="scale the cutoff with observer height")
    sp.set_defaults(func=cmd_series)

    sp = sub.add_parser("entropy-bound", help="certified entropy lower bound")
    common(sp, beam_default=500_000)
    sp.add_argument("--n-list", type=int, nargs="+", default=[2, 3],
                    help="certification levels")
    sp.add_argument("--h-min", type=_positive, default=1.0)
    sp.add_argument("--h-max", type=_positive, default=2.0)
    sp.add_argument("--config-budget", type=int, default=12,
                    help="max re-root configurations tested")
    sp.set_defaults(func=cmd_entropy_bound)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "series":
        if args.t is None:
            args.t = [1.0]
        if args.n < 0:
            print("--n must be >= 0", file=sys.stderr)
            return EXIT_INVALID
    if getattr(args, "beam", None) is not None and args.beam < 1:
        print("--beam must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code
    except mf.ManifoldParseError as exc:
        print("parse error: %s" % exc, file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, AssertionError, KeyError) as exc:
        print("invariant violation: %s" % exc, file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
