"""Command-line runner: ``pauli-compress <command> --config PATH --out DIR``.

Exit codes: 0 success, 2 invalid configuration, 3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigurationError, ResourceError
from . import experiments

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOURCE = 3

COMMANDS = {
    "compress": experiments.run_compress,
    "sweep-weights": experiments.run_convergence_sweep,
    "hcb-demo": experiments.run_hcb_demo,
    "oracle-check": experiments.run_oracle_check,
}


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pauli-compress", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in [*COMMANDS, "export-circuit"]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="experiment config (JSON)")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        p.add_argument("--threads", type=_positive, default=1, help="worker threads (results do not depend on it)")
        p.add_argument("--seed", type=_u64, default=None, help="override the config seed")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "export-circuit":
            p.add_argument("--which", choices=("target", "ansatz", "both"), default="both")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config).with_seed(args.seed)
        if args.command == "export-circuit":
            for path in experiments.export_circuits(cfg, args.out, args.which):
                print(path)
        else:
            result = COMMANDS[args.command](cfg, args.out, args.threads)
            if args.verbose:
                print(json.dumps(result, indent=2, default=str))
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        dump = {"error": str(exc), "stats": exc.stats}
        print(json.dumps(dump, indent=2, sort_keys=True), file=sys.stderr)
        try:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "error_stats.json").write_text(json.dumps(dump, indent=2, sort_keys=True) + "\n")
        except OSError:
            pass
        return EXIT_RESOURCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
