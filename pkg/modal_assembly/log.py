"""Configure logging for the command line.

The library only ever calls ``logging.getLogger(__name__)``; the handler is
installed here, once, by the Typer callback.
"""

import logging

from rich.console import Console
from rich.logging import RichHandler

LOGGER_NAME = "modal_assembly"


def setup_logging(level: str = "WARNING") -> logging.Logger:
    """Attach a Rich handler to the package logger and set its level."""
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(level.upper())

    if not any(isinstance(h, RichHandler) for h in logger.handlers):
        handler = RichHandler(
            console=Console(stderr=True),
            show_time=False,
            show_path=False,
            markup=False,
        )
        handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(handler)

    return logger
