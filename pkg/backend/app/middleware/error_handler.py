"""
Maps exceptions raised by CLI commands to exit codes and stderr messages.
"""
import json
import logging
import sys
from typing import Callable, Optional, TextIO

from pydantic import ValidationError

from app.services.errors import DataError, UsageError, VeripropError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class ErrorHandlerMiddleware:
    """
    Centralized error handling for commands.

    Usage errors exit 1 and repeat the command grammar. Data, parse and I/O
    errors exit 2 with the file and line when known. Unexpected errors also
    exit 2, with the traceback logged.
    """

    def __init__(
        self,
        prog: str = "veriprop",
        usage: Optional[str] = None,
        stream: Optional[TextIO] = None,
    ):
        self.prog = prog
        self.usage = usage
        self.stream = stream

    def _report(self, message: str) -> None:
        print(f"{self.prog}: error: {message}", file=self.stream or sys.stderr)

    def dispatch(self, command: str, call_next: Callable[[], int]) -> int:
        try:
            return call_next()

        except UsageError as e:
            logger.warning("Usage error", extra={"command": command, "error": str(e)})
            if self.usage:
                print(self.usage.rstrip(), file=self.stream or sys.stderr)
            self._report(str(e))
            return EXIT_USAGE

        except DataError as e:
            logger.warning(
                "Data error",
                extra={
                    "command": command,
                    "error": str(e),
                    "path": e.path,
                    "line": e.line,
                },
            )
            location = e.location()
            self._report(f"{location}: {e}" if location else str(e))
            return EXIT_DATA

        except json.JSONDecodeError as e:
            logger.warning("Invalid JSON", extra={"command": command, "error": str(e)})
            self._report(f"line {e.lineno}: invalid JSON: {e.msg}")
            return EXIT_DATA

        except ValidationError as e:
            logger.warning(
                "Invalid record", extra={"command": command, "error": str(e)}
            )
            self._report(f"invalid record: {e.errors()[0]['msg'] if e.errors() else e}")
            return EXIT_DATA

        except OSError as e:
            logger.warning("I/O error", extra={"command": command, "error": str(e)})
            self._report(f"{e.filename}: {e.strerror}" if e.filename else str(e))
            return EXIT_DATA

        except VeripropError as e:
            logger.warning("Command error", extra={"command": command, "error": str(e)})
            self._report(str(e))
            return EXIT_DATA

        except Exception as e:
            logger.error(
                "Unexpected error",
                extra={
                    "command": command,
                    "error": str(e),
                    "error_type": type(e).__name__,
                },
                exc_info=True,
            )
            self._report(f"unexpected {type(e).__name__}: {e}")
            return EXIT_DATA
