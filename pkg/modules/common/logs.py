"""Structured logging setup (loguru).

Logs go to stderr only; stdout carries command output.
"""

from __future__ import annotations

import sys

from loguru import logger

_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> <level>{level: <7}</level> "
    "<cyan>{extra[name]}</cyan> - {message}"
)


def configure_logging(level: str = "INFO", json_lines: bool = False) -> None:
    """(Re)install the single stderr sink."""
    logger.remove()
    logger.configure(extra={"name": "mrd"})
    if json_lines:
        logger.add(sys.stderr, level=level.upper(), serialize=True)
    else:
        logger.add(sys.stderr, level=level.upper(), format=_FORMAT)


def get_logger(name: str):
    return logger.bind(name=name)
