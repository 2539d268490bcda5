"""Command line entry points: picklab verify | sweep | rate-fit."""

from __future__ import annotations

import argparse
import json
import random
import sys

import numpy as np

from .config import ConfigError, load_config
from .runner import run_rate_fit, run_sweep, run_verify


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", metavar="DIR", default=None,
                   help="output directory (default: config output.dir)")
    p.add_argument("--threads", metavar="K", type=int, default=1,
                   help="worker threads for independent samples/sweep members")
    p.add_argument("--tight-ell", action="store_true",
                   help="use the tight ell(t) functional instead of L(t) in bounds")
    p.add_argument("--seed", metavar="S", type=int, default=None,
                   help="seed for randomized property tests (reproducibility)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="picklab",
        description="Finite-dimensional verification laboratory for mean-field "
                    "operator identities and inequalities.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run every check on one configuration")
    p_verify.add_argument("config")
    _add_common(p_verify)

    p_sweep = sub.add_parser("sweep", help="run the N-sweep behind the rate fit")
    p_sweep.add_argument("config")
    _add_common(p_sweep)

    p_fit = sub.add_parser("rate-fit", help="fit convergence slopes from a sweep CSV")
    p_fit.add_argument("csv")
    _add_common(p_fit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None:
        random.seed(args.seed)
        np.random.seed(args.seed % 2**32)

    try:
        if args.command == "rate-fit":
            result = run_rate_fit(args.csv, out_dir=args.out)
            print(json.dumps(result, indent=2, sort_keys=True))
            return 0

        cfg = load_config(args.config)
        out_dir = args.out if args.out is not None else cfg.output_dir
        runner = run_verify if args.command == "verify" else run_sweep
        summary = runner(cfg, out_dir, threads=max(1, args.threads),
                         tight_ell=args.tight_ell)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"picklab: error: {exc}", file=sys.stderr)
        return 2

    for name, check in sorted(summary["checks"].items()):
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status}  {name}  (worst={check['worst']:.6g})")
    print(f"all_passed={summary['all_passed']}  "
          f"runtime={summary['runtime_seconds']}s  out={out_dir}")
    return 0 if summary["all_passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
