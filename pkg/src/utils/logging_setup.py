"""
Logging setup for the command line: rich console handler on the package logger
"""

import logging

from rich.console import Console
from rich.logging import RichHandler

PACKAGE_LOGGER = 'src'


def setup_logging(verbose: bool = False, console: Console = None) -> logging.Logger:
    logger = logging.getLogger(PACKAGE_LOGGER)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    for handler in list(logger.handlers):
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(console=console or Console(stderr=True), show_path=False, markup=False)
    handler.setFormatter(logging.Formatter('%(message)s'))
    logger.addHandler(handler)
    logger.propagate = False
    return logger
