"""
Logging setup and per-command logging for the veriprop CLI.

Logs go to stderr (stdout carries command output) and optionally to a file.
"""
import json
import logging
import sys
import time
import uuid
from typing import Any, Callable, Dict, Optional

from backend.config import Settings

logger = logging.getLogger(__name__)

TEXT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
OWNED_MARK = "_veriprop_handler"

# LogRecord attributes that are not caller-supplied ``extra`` fields
_RESERVED = set(logging.LogRecord("", 0, "", 0, "", (), None).__dict__) | {
    "message",
    "asctime",
}


class JsonFormatter(logging.Formatter):
    """One JSON object per line with the record's ``extra`` fields folded in."""

    def format(self, record: logging.LogRecord) -> str:
        payload: Dict[str, Any] = {
            "time": self.formatTime(record),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for key, value in record.__dict__.items():
            if key not in _RESERVED and not key.startswith("_"):
                payload[key] = value
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str, sort_keys=False)


def configure_logging(settings: Settings, level: Optional[str] = None) -> None:
    """
    Install handlers on the root logger according to ``settings.logging``.

    Args:
        settings: Application settings
        level: Overrides the configured level (the ``--log-level`` flag)
    """
    config = settings.logging
    formatter: logging.Formatter = (
        JsonFormatter() if config.json_format else logging.Formatter(TEXT_FORMAT)
    )

    handlers: list = []
    if config.console_output:
        handlers.append(logging.StreamHandler(sys.stderr))
    if config.file_path:
        handlers.append(logging.FileHandler(config.file_path))
    if not handlers:
        handlers.append(logging.NullHandler())
    for handler in handlers:
        handler.setFormatter(formatter)
        setattr(handler, OWNED_MARK, True)

    # replace only handlers installed by an earlier call
    root = logging.getLogger()
    for existing in list(root.handlers):
        if getattr(existing, OWNED_MARK, False):
            root.removeHandler(existing)
            existing.close()
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel((level or config.level.value).upper())


class CommandLoggingMiddleware:
    """
    Logs the start, completion and failure of each CLI command.

    Every command gets a short run id that is attached to its log records.
    """

    def dispatch(self, command: str, call_next: Callable[[], int]) -> int:
        run_id = str(uuid.uuid4())[:8]
        start_time = time.time()
        logger.info("Command started", extra={"run_id": run_id, "command": command})
        try:
            exit_code = call_next()
        except Exception as e:
            logger.error(
                "Command failed",
                extra={
                    "run_id": run_id,
                    "command": command,
                    "error": str(e),
                    "error_type": type(e).__name__,
                    "process_time": round(time.time() - start_time, 4),
                },
            )
            raise
        logger.info(
            "Command completed",
            extra={
                "run_id": run_id,
                "command": command,
                "exit_code": exit_code,
                "process_time": round(time.time() - start_time, 4),
            },
        )
        return exit_code
