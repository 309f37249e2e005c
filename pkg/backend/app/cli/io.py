"""
File input and atomic output for CLI commands.

Outputs are staged next to their destination and renamed into place, so a
failing command leaves earlier outputs untouched and no partial files behind.
"""
import json
import os
import shutil
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator, List, Optional, Union

from pydantic import ValidationError

from app.models.document import Document
from app.services.errors import DataError, UsageError

PathLike = Union[str, Path]


def read_json(path: PathLike) -> Any:
    """
    Parse a JSON file.

    Raises:
        DataError: the file is missing, unreadable or not valid JSON
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(
            f"cannot read file: {e.strerror}", path=str(path), original_exception=e
        )
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise DataError(
            f"invalid JSON: {e.msg}",
            path=str(path),
            line=e.lineno,
            original_exception=e,
        )


def load_document(path: PathLike) -> Document:
    """Read one summary or EHR document."""
    data = read_json(path)
    try:
        return Document.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise DataError(
            f"invalid document at '{where}': {first['msg']}",
            path=str(path),
            original_exception=e,
        )


def json_files(directory: PathLike) -> List[Path]:
    """The ``*.json`` files of a directory in sorted order."""
    directory = Path(directory)
    if not directory.is_dir():
        raise DataError("not a directory", path=str(directory))
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix == ".json")


def atomic_write(path: PathLike, payload: Union[str, bytes]) -> None:
    """Write ``payload`` to ``path`` through a temporary sibling and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp_name = tempfile.mkstemp(
        prefix=f".{path.name}.", suffix=".tmp", dir=path.parent
    )
    try:
        with os.fdopen(fd, "wb") as handle:
            if isinstance(payload, str):
                payload = payload.encode("utf-8")
            handle.write(payload)
        os.replace(temp_name, path)
    except BaseException:
        Path(temp_name).unlink(missing_ok=True)
        raise


def check_output_directory(path: PathLike, marker: Optional[str] = None) -> Path:
    """
    Resolve a batch output directory and make sure it may be replaced.

    The target must be new, empty, or a previous output holding ``marker``.

    Raises:
        UsageError: the target is the working directory, a filesystem root,
            a file, or a directory with contents veriprop did not write
    """
    resolved = Path(path).resolve()
    if resolved == Path.cwd().resolve() or resolved == Path(resolved.anchor):
        raise UsageError(
            f"refusing to replace {resolved}: choose a dedicated output directory"
        )
    if not resolved.exists():
        return resolved
    if not resolved.is_dir():
        raise UsageError(f"output path {resolved} exists and is not a directory")
    if any(resolved.iterdir()) and not (marker and (resolved / marker).is_file()):
        raise UsageError(f"output directory {resolved} is not empty")
    return resolved


@contextmanager
def staged_directory(path: PathLike, marker: Optional[str] = None) -> Iterator[Path]:
    """
    Yield an empty staging directory that replaces ``path`` on success.

    On error the staging directory is removed and ``path`` is left as it was.
    """
    path = check_output_directory(path, marker)
    path.parent.mkdir(parents=True, exist_ok=True)
    staging = Path(tempfile.mkdtemp(prefix=f".{path.name}.", dir=path.parent))
    backup = staging.with_name(f"{staging.name}.old")
    try:
        yield staging
        if path.exists():
            os.replace(path, backup)
        try:
            os.replace(staging, path)
        except OSError:
            if backup.exists():
                os.replace(backup, path)
            raise
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    shutil.rmtree(backup, ignore_errors=True)
