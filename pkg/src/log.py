"""
SBRO-FL Logging - loguru sink configuration
"""
from __future__ import annotations

import sys
from typing import Any, TextIO

from loguru import logger

_FORMAT = "<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | {message}"


def configure_logging(level: str = "INFO", sink: TextIO | Any = None) -> None:
    """
    Replace loguru's default handler with the simulator's format.

    Args:
        level: Minimum level name (DEBUG, INFO, WARNING, ...)
        sink: Destination (defaults to stderr so CSV on stdout stays clean)
    """
    logger.remove()
    logger.add(sink or sys.stderr, level=level.upper(), format=_FORMAT, colorize=sink is None)
