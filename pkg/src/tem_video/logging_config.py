"""Logging configuration for the ``tem_video`` package.

- **Text format** (``log_format="text"``): human-readable with timestamps,
  the default for interactive CLI runs.
- **JSON format** (``log_format="json"``): one JSON object per line, handy
  when sweep logs are collected and filtered afterwards.

Structured context passed through ``extra=`` (``sensor_id``, ``grid``,
``target``, ``rank``...) is kept as top-level keys in JSON output and
appended as ``key=value`` pairs in text output.

Everything goes to stderr: stdout belongs to CSV output and to the MCP
stdio transport.
"""

from __future__ import annotations

import json
import logging
import sys

from datetime import UTC, datetime
from typing import Any


# Attributes every LogRecord has; anything else came in through ``extra=``.
_RESERVED_ATTRS: frozenset[str] = frozenset(
    vars(logging.LogRecord("", 0, "", 0, "", (), None)).keys()
) | {"message", "asctime", "taskName"}


def record_context(record: logging.LogRecord) -> dict[str, Any]:
    """Return the ``extra=`` fields attached to *record*."""
    return {k: v for k, v in vars(record).items() if k not in _RESERVED_ATTRS}


class JSONFormatter(logging.Formatter):
    """Emit each log record as a single-line JSON object.

    Fields: ``timestamp`` (ISO-8601 UTC), ``level``, ``logger``, ``message``,
    then any structured context.  If the record carries exception info it is
    included under ``exception``.
    """

    def format(self, record: logging.LogRecord) -> str:
        log_data: dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created, tz=UTC).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        log_data.update(record_context(record))
        if record.exc_info and record.exc_info[0] is not None:
            log_data["exception"] = self.formatException(record.exc_info)
        return json.dumps(log_data, default=str)


class ContextTextFormatter(logging.Formatter):
    """Plain text formatter that appends structured context as ``k=v``."""

    def format(self, record: logging.LogRecord) -> str:
        text = super().format(record)
        context = record_context(record)
        if context:
            text += " " + " ".join(f"{k}={v}" for k, v in context.items())
        return text


_TEXT_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
_TEXT_DATEFMT = "%Y-%m-%d %H:%M:%S"


def setup_logging(
    *,
    log_level: str = "INFO",
    log_format: str = "text",
) -> None:
    """Configure logging for the ``tem_video`` package.

    Call once at startup (from the CLI entrypoint) before any other work.

    Parameters
    ----------
    log_level:
        Python log level name (DEBUG, INFO, WARNING, ERROR, CRITICAL).
    log_format:
        ``"json"`` for structured JSON output, ``"text"`` for
        human-readable output.
    """
    level = getattr(logging, log_level.upper(), logging.INFO)

    if log_format == "json":
        formatter: logging.Formatter = JSONFormatter()
    else:
        formatter = ContextTextFormatter(_TEXT_FORMAT, datefmt=_TEXT_DATEFMT)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    pkg_logger = logging.getLogger("tem_video")
    pkg_logger.setLevel(level)
    pkg_logger.handlers = [handler]
    pkg_logger.propagate = False
