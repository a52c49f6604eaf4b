"""Command-line entry point: extract --config <path>."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import List, Optional

from .config import from_file
from .errors import ExtractorError
from .runner import extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="score a stimulus corpus with pretrained checkpoints",
    )
    parser.add_argument("--config", required=True, help="path to a JSON config")
    parser.add_argument(
        "--quiet", action="store_true", help="only log warnings and errors"
    )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        summary = extract(from_file(args.config))
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(
        f"{summary.output}: {summary.n_records} records "
        f"from {summary.n_models} models"
        + (f" ({len(summary.skipped)} skipped)" if summary.skipped else "")
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
