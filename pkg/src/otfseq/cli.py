"""Command-line front end.

Exit codes: 0 on success, 2 for configuration or invocation problems,
3 for numerical failures (solver non-convergence, indefinite systems).
"""

from __future__ import annotations

import argparse
import sys

from . import harness
from .config import load_config
from .errors import ConfigError, NumericalError

_RUNNERS = {
    "ber": (harness.run_ber, "bit error rate sweep"),
    "residuals": (harness.run_residuals, "solver residual traces with bounds"),
    "xivar": (harness.run_xivar, "variance of the shared MMSE scaling factor"),
    "sparsity": (harness.run_sparsity, "factor sparsity-level report"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otfseq",
        description="Link-level OTFS equalizer experiments (CSV output).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, blurb) in _RUNNERS.items():
        cmd = sub.add_parser(name, help=blurb)
        cmd.add_argument("--config", required=True, help="key = value config file")
        cmd.add_argument("--out", required=True, help="output CSV path")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override master_seed")
        cmd.add_argument("--threads", type=int, default=1,
                         help="worker process cap (default 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    runner = _RUNNERS[args.command][0]
    try:
        if args.threads < 1:
            raise ConfigError("threads must be at least 1")
        overrides = {} if args.seed is None else {"master_seed": args.seed}
        cfg = load_config(args.config, overrides)
        text = runner(cfg, threads=args.threads)
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except ConfigError as exc:
        print(f"otfseq: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"otfseq: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"otfseq: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
