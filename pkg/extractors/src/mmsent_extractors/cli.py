"""Command line entry point: run extraction jobs from JSON specs."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ExtractionError
from .extract import extract
from .jobs import load_job


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def build_parser():
    parser = _ArgumentParser(
        prog="mmsent-extract",
        description="Produce embedding store directories from images and tweets.",
    )
    parser.add_argument("--job", required=True, action="append",
                        help="job spec JSON; may be given multiple times")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code or 0
    try:
        for job_path in args.job:
            out = extract(load_job(job_path))
            print(f"wrote {out}")
    except (ExtractionError, OSError, json.JSONDecodeError) as exc:
        print(f"mmsent-extract: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
