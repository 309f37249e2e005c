"""
Adapter checkpoints.

Binary layout, little-endian throughout::

    offset  size     field
    0       4        magic b"LORA"
    4       4        uint32 d
    8       4        uint32 k
    12      4        uint32 r
    16      8        float64 alpha
    24      8·d·r    float64 A, row-major (d×r)
    ...     8·k·r    float64 B, row-major (k×r)

The JSON form carries the same fields: ``{"d", "k", "r", "alpha", "A", "B"}``
with A and B as nested row lists.
"""
import json
import struct
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np

from app.lora.adapters import AdapterPair
from app.models.codec import dumps
from app.services.errors import DataError

CheckpointFormat = Literal["json", "binary"]

MAGIC = b"LORA"
HEADER = struct.Struct("<4sIIId")
FLOAT = np.dtype("<f8")


def _where(path: Optional[Path]) -> Optional[str]:
    return str(path) if path else None


def encode_binary(adapter: AdapterPair) -> bytes:
    d, r = adapter.A.shape
    k = adapter.B.shape[0]
    header = HEADER.pack(MAGIC, d, k, r, float(adapter.alpha))
    A = adapter.A.astype(FLOAT).tobytes(order="C")
    B = adapter.B.astype(FLOAT).tobytes(order="C")
    return header + A + B


def decode_binary(payload: bytes, path: Optional[Path] = None) -> AdapterPair:
    if len(payload) < HEADER.size:
        raise DataError("checkpoint is shorter than its header", path=_where(path))
    magic, d, k, r, alpha = HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise DataError(f"bad checkpoint magic {magic!r}", path=_where(path))
    expected = HEADER.size + FLOAT.itemsize * r * (d + k)
    if len(payload) != expected:
        raise DataError(
            f"checkpoint holds {len(payload)} bytes, expected {expected}",
            path=_where(path),
        )
    a_end = HEADER.size + FLOAT.itemsize * d * r
    A = np.frombuffer(payload, dtype=FLOAT, count=d * r, offset=HEADER.size)
    A = A.reshape(d, r)
    B = np.frombuffer(payload, dtype=FLOAT, count=k * r, offset=a_end).reshape(k, r)
    return AdapterPair(A=A, B=B, alpha=alpha)


def encode_json(adapter: AdapterPair) -> str:
    return dumps(
        {
            "d": adapter.A.shape[0],
            "k": adapter.B.shape[0],
            "r": adapter.r,
            "alpha": adapter.alpha,
            "A": adapter.A.tolist(),
            "B": adapter.B.tolist(),
        }
    )


def decode_json(text: str, path: Optional[Path] = None) -> AdapterPair:
    try:
        data = json.loads(text)
        A = np.array(data["A"], dtype=np.float64).reshape(data["d"], data["r"])
        B = np.array(data["B"], dtype=np.float64).reshape(data["k"], data["r"])
        return AdapterPair(A=A, B=B, alpha=float(data["alpha"]))
    except json.JSONDecodeError as e:
        raise DataError(
            f"invalid checkpoint JSON: {e.msg}",
            path=_where(path),
            line=e.lineno,
            original_exception=e,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(
            f"malformed checkpoint: {e}", path=_where(path), original_exception=e
        )


def encode_checkpoint(
    adapter: AdapterPair, fmt: CheckpointFormat = "json"
) -> Union[str, bytes]:
    return encode_binary(adapter) if fmt == "binary" else encode_json(adapter)


def save_checkpoint(
    adapter: AdapterPair, path: Path, fmt: CheckpointFormat = "json"
) -> None:
    payload = encode_checkpoint(adapter, fmt)
    if isinstance(payload, bytes):
        Path(path).write_bytes(payload)
    else:
        Path(path).write_text(payload, encoding="utf-8")


def load_checkpoint(path: Path) -> AdapterPair:
    """Read either format; binary files are recognized by their magic."""
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise DataError(
            f"cannot read checkpoint: {e.strerror or e}",
            path=str(path),
            original_exception=e,
        ) from e
    if payload.startswith(MAGIC):
        return decode_binary(payload, path)
    try:
        text = payload.decode("utf-8")
    except UnicodeDecodeError as e:
        raise DataError(
            "checkpoint is neither binary nor UTF-8 JSON",
            path=str(path),
            original_exception=e,
        ) from e
    return decode_json(text, path)
