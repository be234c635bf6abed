"""Parameter checkpoint files.

Binary layout: magic b"LETS", version u32, length d as u64 (both
little-endian), then d little-endian float64 values.  A text sidecar
(<path>.layout.txt) describes the parameter layout.  Round-trips are
bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .layouts import ParameterLayout, layout_from_text
from .vectors import DTYPE

MAGIC = b"LETS"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")


def sidecar_path(path) -> Path:
    return Path(str(path) + ".layout.txt")


def save_checkpoint(path, theta, layout: ParameterLayout) -> Path:
    path = Path(path)
    theta = np.ascontiguousarray(theta, dtype=DTYPE)
    if theta.shape != (layout.total,):
        raise FormatError(f"theta has {theta.shape[0]} entries, layout declares {layout.total}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, theta.shape[0]))
        fh.write(theta.astype("<f8", copy=False).tobytes())
    sidecar_path(path).write_text(layout.to_text(), encoding="utf-8")
    return path


def load_checkpoint(path) -> tuple[np.ndarray, ParameterLayout]:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header, {len(blob)} bytes at offset 0 (need {_HEADER.size})")
    magic, version, d = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at offset 0")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version} at offset 4")
    expected = _HEADER.size + 8 * d
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(blob)} (payload starts at offset {_HEADER.size})")
    theta = np.frombuffer(blob, dtype="<f8", count=d, offset=_HEADER.size).astype(DTYPE)
    side = sidecar_path(path)
    if not side.exists():
        raise FormatError(f"{side}: layout sidecar missing")
    layout = layout_from_text(side.read_text(encoding="utf-8"))
    if layout.total != d:
        raise FormatError(f"{path}: holds {d} values but sidecar layout covers {layout.total}")
    return theta, layout
