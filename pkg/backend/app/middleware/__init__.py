"""
Command middleware: logging setup, per-command logging and error mapping.
"""

from .error_handler import EXIT_DATA, EXIT_OK, EXIT_USAGE, ErrorHandlerMiddleware
from .logging import CommandLoggingMiddleware, JsonFormatter, configure_logging

__all__ = [
    "EXIT_DATA",
    "EXIT_OK",
    "EXIT_USAGE",
    "ErrorHandlerMiddleware",
    "CommandLoggingMiddleware",
    "JsonFormatter",
    "configure_logging",
]
