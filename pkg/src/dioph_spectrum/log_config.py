"""Logging setup for the dioph CLI.

Library modules only create ``logging.getLogger(__name__)`` loggers; the
CLI calls :func:`configure_logging` once to attach a handler.
"""

import json
import logging
from datetime import datetime, timezone
from enum import Enum

from rich.console import Console
from rich.logging import RichHandler

_RESERVED = set(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message"}


class LogLevel(Enum):
    """Log levels for structured logging."""

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


class JSONFormatter(logging.Formatter):
    """JSON log formatter for structured logging."""

    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            "timestamp": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        # Fields passed through ``extra=``
        for key, value in record.__dict__.items():
            if key not in _RESERVED and not key.startswith("_"):
                log_data[key] = value
        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_data, default=str)


def configure_logging(level: LogLevel = LogLevel.WARNING, json_lines: bool = False) -> None:
    """Attach a single handler to the package logger.

    Args:
        level: Minimum level to emit
        json_lines: Emit JSON lines instead of rich-formatted records
    """
    logger = logging.getLogger("dioph_spectrum")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    handler: logging.Handler
    if json_lines:
        handler = logging.StreamHandler()
        handler.setFormatter(JSONFormatter())
    else:
        handler = RichHandler(
            console=Console(stderr=True),
            show_path=False,
            rich_tracebacks=False,
        )
        handler.setFormatter(logging.Formatter("%(message)s"))

    logger.addHandler(handler)
    logger.setLevel(level.value)
