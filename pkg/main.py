#!/usr/bin/env python3
"""
Prefix Adder Kit - Command-line entry point
Build, verify, score, emit and simulate parallel-prefix adders
"""

import logging
import sys
from typing import List, Optional

from cli.parser import build_parser
from cli.router import EXIT_USAGE, CommandRouter


logger = logging.getLogger(__name__)


def configure_logging(verbose: bool = False, quiet: bool = False):
    """Log to stderr at the level chosen by --verbose / --quiet"""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run the command and return its exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    configure_logging(verbose=args.verbose, quiet=args.quiet)
    logger.debug(f"Running {args.command} with {vars(args)}")
    return CommandRouter().handle_command(args)


if __name__ == "__main__":
    sys.exit(main())
