"""IDX binary ingestion (the MNIST file format).

Images file: u32 big-endian magic 0x00000803, then counts n, rows, cols
(u32 BE each), then n*rows*cols unsigned bytes.  Labels file: magic
0x00000801, count n, then n unsigned bytes.  Pixels load scaled to
[0, 1]; malformed input raises FormatError naming the byte offset.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .datasets import LabeledDataset
from .errors import FormatError

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _read_u32s(blob: bytes, count: int, offset: int, path) -> tuple[int, ...]:
    need = 4 * count
    if len(blob) < offset + need:
        raise FormatError(f"{path}: truncated, need {need} header bytes at offset {offset}, "
                          f"file holds {len(blob) - offset}")
    return struct.unpack_from(f">{count}I", blob, offset)


def _read_payload(blob: bytes, count: int, offset: int, path) -> np.ndarray:
    if len(blob) - offset != count:
        raise FormatError(f"{path}: expected {count} payload bytes at offset {offset}, "
                          f"found {len(blob) - offset}")
    return np.frombuffer(blob, dtype=np.uint8, count=count, offset=offset)


def load_idx(images_path, labels_path) -> LabeledDataset:
    """Load a paired images/labels IDX file set as a flat-feature dataset."""
    images_path, labels_path = Path(images_path), Path(labels_path)

    blob = images_path.read_bytes()
    magic, = _read_u32s(blob, 1, 0, images_path)
    if magic != IMAGES_MAGIC:
        raise FormatError(f"{images_path}: bad magic 0x{magic:08x} at offset 0 "
                          f"(expected 0x{IMAGES_MAGIC:08x})")
    n, rows, cols = _read_u32s(blob, 3, 4, images_path)
    pixels = _read_payload(blob, n * rows * cols, 16, images_path)

    blob = labels_path.read_bytes()
    magic, = _read_u32s(blob, 1, 0, labels_path)
    if magic != LABELS_MAGIC:
        raise FormatError(f"{labels_path}: bad magic 0x{magic:08x} at offset 0 "
                          f"(expected 0x{LABELS_MAGIC:08x})")
    n_labels, = _read_u32s(blob, 1, 4, labels_path)
    labels = _read_payload(blob, n_labels, 8, labels_path)

    if n != n_labels:
        raise FormatError(f"{images_path}: holds {n} images but {labels_path} holds {n_labels} labels")
    features = pixels.reshape(n, rows * cols).astype(np.float64) / 255.0
    num_classes = int(labels.max()) + 1 if labels.size else 1
    return LabeledDataset(features, labels.astype(np.int64), num_classes,
                          f"idx({images_path.name},{labels_path.name})")


def write_idx_images(path, images: np.ndarray) -> None:
    """Write an (n, rows, cols) uint8 array as an IDX images file."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise FormatError(f"images must be (n, rows, cols), got shape {images.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">4I", IMAGES_MAGIC, *images.shape))
        fh.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    """Write an (n,) integer array as an IDX labels file."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise FormatError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise FormatError("labels must fit in one unsigned byte")
    with open(path, "wb") as fh:
        fh.write(struct.pack(">2I", LABELS_MAGIC, labels.shape[0]))
        fh.write(labels.astype(np.uint8).tobytes())
