"""Command-line entry point: ``lqgkpz <command> [options]``.

Exit status is 0 when every check passes (or the command checks nothing),
2 when a threshold check fails and 1 on bad input or any other error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .experiments import COMMANDS, ExperimentConfig, run, write_report

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def parse_seeds(text: str) -> list[int]:
    """``"7"``, ``"0,3,5"`` or a half-open range ``"0:20"``."""
    try:
        if ":" in text:
            a, b = text.split(":")
            seeds = list(range(int(a), int(b)))
        else:
            seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def _vertex(text: str) -> list[int]:
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected i,j got {text!r}") from None
    return [i, j]


def _shared(p: argparse.ArgumentParser, n: int = 256) -> None:
    g = p.add_argument_group("shared")
    g.add_argument("--gamma", type=float, default=None, help="coupling (default sqrt(8/3))")
    g.add_argument("--d-gamma", type=float, default=None, help="dimension exponent; required unless gamma=sqrt(8/3)")
    g.add_argument("--n", type=int, default=n, help="grid side, a power of two")
    s = g.add_mutually_exclusive_group()
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--seeds", type=parse_seeds, default=None, help="e.g. 0:20 or 1,4,9")
    g.add_argument("--out", default="out", help="output directory")
    g.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    g.add_argument("--jobs", type=int, default=1, help="worker processes over seeds")


def _field_opts(p, norm=True):
    p.add_argument("--zero-field", action="store_true", help="use h = 0 instead of a DGFF sample")
    p.add_argument("--field", dest="field_path", default=None, help="load a saved field file")
    if norm:
        p.add_argument("--norm-samples", type=int, default=1,
                       help="fields used for the median crossing normalisation")


def _levels(p, flag="--levels", dest=None):
    p.add_argument(flag, dest=dest, type=int, nargs="+", default=None, help="dyadic levels of the fit")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lqgkpz", description="LQG metric dimension experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kpz", help="sampled dimension-relation curves and constants")
    _shared(p)

    p = sub.add_parser("sample-gff", help="sample and save DGFF fields")
    _shared(p)

    for name, helptext in (("dist", "distance between two vertices"), ("geodesic", "geodesic vertex list")):
        p = sub.add_parser(name, help=helptext)
        _shared(p)
        _field_opts(p)
        p.add_argument("--from", dest="source", type=_vertex, default=None, metavar="I,J")
        p.add_argument("--to", dest="target", type=_vertex, default=None, metavar="I,J")

    p = sub.add_parser("ball", help="metric ball boundary vertices")
    _shared(p)
    _field_opts(p)
    p.add_argument("--center", type=_vertex, default=None, metavar="I,J")
    p.add_argument("--radius", type=float, default=0.15)
    p.add_argument("--mask", action="store_true", help="also write a PGM mask of the ball")

    p = sub.add_parser("verify-kpz", help="quantum dimension of a fixed set vs KPZ")
    _shared(p)
    _field_opts(p)
    p.add_argument("--recipe", choices=["segment", "cantor_dust", "full_square"], default="segment")
    p.add_argument("--ratio", type=float, default=1.0 / 3.0, help="Cantor ratio")
    _levels(p)
    p.add_argument("--method", choices=["auto", "exact", "sweep"], default="auto")
    p.add_argument("--tol", type=float, default=0.25)
    p.add_argument("--baseline-n", type=int, default=None,
                   help="also run at this size and require the estimate to move toward the prediction")

    p = sub.add_parser("thick", help="thick-point dimensions")
    _shared(p)
    p.add_argument("--alpha", dest="alphas", type=float, nargs="+", default=[0.0, 1.0, 2.0])
    p.add_argument("--zeta", type=float, default=0.7)
    p.add_argument("--ladder", dest="eps_ladder", type=float, nargs="+", default=None)
    _levels(p)
    _levels(p, "--quantum-levels", "quantum_levels")
    p.add_argument("--box-tol", type=float, default=0.1)
    p.add_argument("--quantum-tol", type=float, default=0.35)
    p.add_argument("--zero-slope", type=float, default=0.3)
    p.add_argument("--norm-samples", type=int, default=1)
    p.add_argument("--method", choices=["auto", "exact", "sweep"], default="auto")

    p = sub.add_parser("geodesic-dim", help="geodesic box dimension vs its bound")
    _shared(p, 2048)
    _field_opts(p)
    p.add_argument("--from", dest="source", type=_vertex, default=None, metavar="I,J")
    p.add_argument("--to", dest="target", type=_vertex, default=None, metavar="I,J")
    _levels(p)
    p.add_argument("--slack", type=float, default=0.1)

    p = sub.add_parser("ball-boundary", help="ball boundary box dimension vs its bound")
    _shared(p, 2048)
    _field_opts(p)
    p.add_argument("--center", type=_vertex, default=None, metavar="I,J")
    p.add_argument("--radius", type=float, default=0.15)
    _levels(p)
    p.add_argument("--slack", type=float, default=0.1)
    p.add_argument("--min-component", type=int, default=64)

    p = sub.add_parser("tiling", help="quantum tilings: well-formedness and containment")
    _shared(p, 512)
    _field_opts(p)
    p.add_argument("--m", dest="m_values", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    p.add_argument("--samples", dest="containment_samples", type=int, default=200)

    p = sub.add_parser("counts", help="square and tile count profiles vs their bounds")
    _shared(p, 512)
    _field_opts(p)
    p.add_argument("--levels", dest="count_levels", type=int, nargs="+", default=[4, 5, 6, 7])
    p.add_argument("--s", dest="s_values", type=float, nargs="+", default=[0.2, 0.3, 0.4, 0.5, 0.6, 0.7])
    p.add_argument("--t", dest="t_values", type=float, nargs="+",
                   default=[0.3, 0.45, 0.6, 0.75, 0.9, 1.05])
    p.add_argument("--m", dest="m_values", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    p.add_argument("--zeta", dest="count_zeta", type=float, default=0.3)
    p.add_argument("--threshold", dest="pass_threshold", type=float, default=0.95)
    p.add_argument("--method", choices=["auto", "exact", "sweep"], default="auto")
    return ap


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    opts = dict(vars(args))
    seeds = opts.pop("seeds")
    seed = opts.pop("seed")
    opts["seeds"] = seeds if seeds is not None else [0 if seed is None else seed]
    opts["out_dir"] = opts.pop("out")
    opts["timestamp"] = not opts.pop("no_timestamp")
    if opts["gamma"] is None:
        opts.pop("gamma")
    known = ExperimentConfig.__dataclass_fields__
    return ExperimentConfig(**{k: v for k, v in opts.items() if k in known})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        report = run(cfg)
        paths = write_report(report, cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(json.dumps({"command": report.command, "passed": report.passed,
                      "outputs": [str(p) for p in paths]}))
    if report.passed is False:
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
