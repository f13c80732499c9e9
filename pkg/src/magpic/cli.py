"""Command line entry point: `magpic benchmark|diocotron ...`.

Progress goes to stderr, data products to the output directory, and on
failure a single-line machine-readable JSON error object is printed to
stdout before exiting nonzero.
"""

import argparse
import dataclasses
import json
import sys

from . import __version__
from .errors import ConfigError, MagpicError
from .experiments import PRESETS, parse_config, preset, run_benchmark, run_diocotron

_EXPECTED_KIND = {"benchmark": "BenchmarkConfig", "diocotron": "DiocotronConfig"}


def _add_common(sub):
    src = sub.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a JSON config file")
    src.add_argument("--preset", help=f"shipped preset name ({', '.join(sorted(PRESETS))})")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--threads", type=int, default=1,
                     help="deterministic worker count for particle reductions")
    sub.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="magpic",
        description="Asymptotic-preserving stochastic PIC experiments",
    )
    ap.add_argument("--version", action="version", version=f"magpic {__version__}")
    subs = ap.add_subparsers(dest="command", required=True)
    _add_common(subs.add_parser("benchmark", help="single-particle error studies"))
    _add_common(subs.add_parser("diocotron", help="self-consistent instability run"))
    return ap


def _load_config(args):
    cfg = parse_config(args.config) if args.config else preset(args.preset)
    want = _EXPECTED_KIND[args.command]
    if type(cfg).__name__ != want:
        raise ConfigError("kind", f"{args.command} needs a {want}, got {type(cfg).__name__}")
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.threads < 1:
        raise ConfigError("threads", "must be at least 1")
    return cfg


def _fail(exc, code):
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    if getattr(exc, "residual", None) is not None:
        payload["error"]["residual"] = exc.residual
    print(json.dumps(payload))
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ConfigError, OSError) as exc:
        return _fail(exc, 2)
    try:
        if args.command == "benchmark":
            run_benchmark(cfg, args.out, quiet=args.quiet)
        else:
            run_diocotron(cfg, args.out, workers=args.threads, quiet=args.quiet)
    except MagpicError as exc:
        return _fail(exc, 1)
    if not args.quiet:
        print(f"[magpic] outputs written to {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
