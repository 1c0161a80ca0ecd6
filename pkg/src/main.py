#!/usr/bin/env python3
"""Main entry point for the rnp-certify command."""

import logging
import sys

from .cli import run
from .config import get_config

logger = logging.getLogger(__name__)


def main() -> None:
    """Main entry point."""
    try:
        level = get_config().run.log_level
    except ValueError as error:
        logging.basicConfig(level=logging.ERROR, stream=sys.stderr)
        logger.error(f"Configuration error: {error}")
        sys.exit(2)

    # Logs go to stderr so JSON documents on stdout stay clean
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stderr,
    )
    sys.exit(run())


if __name__ == "__main__":
    main()
