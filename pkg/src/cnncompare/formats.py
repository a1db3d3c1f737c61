"""Binary and JSON wire formats for matrices and attention maps.

Matrix files are little-endian float32, row-major, with a 12-byte header:
4-byte ASCII magic, then rows and cols as signed 32-bit integers.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import IoFailureError

MAGIC_ATTENTION = b"ATTN"
MAGIC_CONFIDENCE = b"CONF"
MAGIC_DISTANCE = b"DIST"

_HEADER = struct.Struct("<4sii")


def matrix_to_bytes(magic: bytes, arr: np.ndarray) -> bytes:
    """Serialize a 2D array as float32 LE with a {magic, rows, cols} header."""
    a = np.ascontiguousarray(arr, dtype="<f4")
    if a.ndim != 2:
        raise ValueError(f"expected 2D array, got shape {a.shape}")
    return _HEADER.pack(magic, a.shape[0], a.shape[1]) + a.tobytes()


def matrix_from_bytes(data: bytes, expect_magic: bytes | None = None) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise IoFailureError("matrix payload shorter than header")
    magic, rows, cols = _HEADER.unpack_from(data)
    if expect_magic is not None and magic != expect_magic:
        raise IoFailureError(f"bad magic {magic!r}, expected {expect_magic!r}")
    if rows < 0 or cols < 0:
        raise IoFailureError(f"negative matrix shape ({rows}, {cols})")
    expected = _HEADER.size + rows * cols * 4
    if len(data) != expected:
        raise IoFailureError(f"matrix payload is {len(data)} bytes, expected {expected}")
    flat = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    return flat.reshape(rows, cols).copy()


def json_to_bytes(obj) -> bytes:
    """Canonical JSON encoding (sorted keys) so equal payloads are byte-equal."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def json_from_bytes(data: bytes):
    return json.loads(data.decode("utf-8"))
