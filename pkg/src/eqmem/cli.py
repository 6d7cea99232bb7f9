"""``eqmem <config-path> [--seed U64] [--trials N] [--out PATH] [--workers N]``

Exit codes: 0 success, 2 configuration error, 3 resource error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from eqmem import harness
from eqmem.errors import ConfigError, ResourceError

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqmem", description="Run one equilibrium-memory experiment from a config file.")
    parser.add_argument("config", help="key=value experiment config")
    parser.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    parser.add_argument("--trials", type=int, help="override the config trial count")
    parser.add_argument("--workers", type=int, help="parallel trial workers (output is unaffected)")
    parser.add_argument("--out", help="CSV output path; the sidecar is written next to it")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config_path = Path(args.config)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"eqmem: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = harness.parse_config(text)
        if args.seed is not None:
            config.seed = args.seed
        if args.trials is not None:
            config.trials = args.trials
        if args.workers is not None:
            config.workers = args.workers
        if args.out is not None:
            config.out = args.out
        harness.validate(config)
        record = harness.run(config)
    except ConfigError as exc:
        print(f"eqmem: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"eqmem: resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    out = Path(config.out) if config.out else config_path.with_suffix(".csv")
    try:
        csv_path, meta_path = harness.emit_plotdata(record, out)
    except OSError as exc:
        print(f"eqmem: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {csv_path} and {meta_path} ({record.duration:.3f} s, "
          f"backend={record.backend})")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
