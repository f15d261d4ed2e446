"""Command-line entry point.

    mvcov run <config>                 run the configured experiment
    mvcov validate <config>            same, for the validate-* kinds
    mvcov info --point <id> <config>   per-point covariance diagnostics

Common flags: --seed, --out, --threads, --weighting.
"""

import argparse
import sys

from .config import load_config
from .errors import MvcovError
from .experiments import point_info_text, run_experiment

_VALIDATE_KINDS = ("validate-geometric", "validate-photometric",
                   "validate-feature")


def _add_common(parser):
    parser.add_argument("config", help="path to an INI experiment config")
    parser.add_argument("--seed", type=int, help="override the top-level seed")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--threads", type=int, help="worker processes")
    parser.add_argument("--weighting", choices=("uniform", "model"),
                        help="override residual weighting")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mvcov",
        description="multi-view residual covariance experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "validate"):
        _add_common(sub.add_parser(name))
    info = sub.add_parser("info")
    info.add_argument("--point", type=int, required=True,
                      help="point id to describe")
    _add_common(info)
    return parser


def _config_from(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output_dir = args.out
    if args.threads is not None:
        cfg.threads = args.threads
    if args.weighting is not None:
        cfg.weighting = args.weighting
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from(args)
        if args.command == "validate" and cfg.kind not in _VALIDATE_KINDS:
            print(f"'mvcov validate' needs a validate-* experiment kind, "
                  f"got {cfg.kind!r}")
            return 1
        if args.command == "info":
            print(point_info_text(cfg, args.point))
            return 0
        return run_experiment(cfg)
    except MvcovError as e:
        print(f"error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
