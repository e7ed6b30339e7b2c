"""CLI context helpers for cavmodes."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from rich.console import Console
from rich.logging import RichHandler

LOGGER_NAME = "cavmodes"


@dataclass(slots=True)
class AppContext:
    """Shared CLI context."""

    console: Console
    no_color: bool
    log_level: int


def resolve_log_level(verbose: bool, quiet: bool) -> int:
    """Return the logging level selected by --verbose/--quiet."""
    if verbose:
        return logging.DEBUG
    if quiet:
        return logging.WARNING
    return logging.INFO


def configure_logging(console: Console, level: int) -> logging.Logger:
    """Attach a RichHandler bound to ``console`` to the package logger.

    Earlier handlers are removed first.
    """
    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = RichHandler(
        console=console, show_time=False, show_path=False, markup=False
    )
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)
    logger.setLevel(level)
    return logger
