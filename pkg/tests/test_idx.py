"""IDX binary ingestion against byte-crafted fixtures."""

import struct

import numpy as np
import pytest

from samlab.errors import FormatError
from samlab.idx import (IMAGES_MAGIC, LABELS_MAGIC, load_idx,
                        write_idx_images, write_idx_labels)


def write_pair(tmp_path, images, labels):
    img_path = tmp_path / "imgs.idx"
    lbl_path = tmp_path / "lbls.idx"
    write_idx_images(img_path, images)
    write_idx_labels(lbl_path, labels)
    return img_path, lbl_path


def test_two_image_fixture_round_trips(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(2, 28, 28), dtype=np.uint8)
    labels = np.array([3, 7], dtype=np.uint8)
    ds = load_idx(*write_pair(tmp_path, images, labels))
    assert (ds.n, ds.p) == (2, 784)
    assert ds.num_classes == 8
    assert ds.labels.tolist() == [3, 7]
    # pixel bytes survive the [0, 1] scaling exactly
    restored = np.round(ds.features * 255.0).astype(np.uint8).reshape(2, 28, 28)
    assert restored.tobytes() == images.tobytes()
    assert ds.features.min() >= 0.0 and ds.features.max() <= 1.0


def test_count_mismatch_raises(tmp_path):
    images = np.zeros((3, 4, 4), dtype=np.uint8)
    labels = np.zeros(2, dtype=np.uint8)
    img_path, lbl_path = write_pair(tmp_path, images, labels)
    with pytest.raises(FormatError, match="3 images but .* 2 labels"):
        load_idx(img_path, lbl_path)


def test_bad_magic_names_offset(tmp_path):
    img_path = tmp_path / "imgs.idx"
    img_path.write_bytes(struct.pack(">4I", 0xDEADBEEF, 1, 2, 2) + bytes(4))
    lbl_path = tmp_path / "lbls.idx"
    write_idx_labels(lbl_path, np.array([0], dtype=np.uint8))
    with pytest.raises(FormatError, match="offset 0"):
        load_idx(img_path, lbl_path)


def test_truncated_payload_names_offset(tmp_path):
    img_path = tmp_path / "imgs.idx"
    img_path.write_bytes(struct.pack(">4I", IMAGES_MAGIC, 2, 2, 2) + bytes(5))  # needs 8
    lbl_path = tmp_path / "lbls.idx"
    write_idx_labels(lbl_path, np.array([0, 1], dtype=np.uint8))
    with pytest.raises(FormatError, match="offset 16"):
        load_idx(img_path, lbl_path)


def test_truncated_header(tmp_path):
    img_path = tmp_path / "imgs.idx"
    img_path.write_bytes(b"\x00\x00")
    lbl_path = tmp_path / "lbls.idx"
    write_idx_labels(lbl_path, np.array([], dtype=np.uint8))
    with pytest.raises(FormatError, match="truncated"):
        load_idx(img_path, lbl_path)


def test_labels_magic_checked(tmp_path):
    img_path = tmp_path / "imgs.idx"
    write_idx_images(img_path, np.zeros((1, 2, 2), dtype=np.uint8))
    lbl_path = tmp_path / "lbls.idx"
    lbl_path.write_bytes(struct.pack(">2I", LABELS_MAGIC + 1, 1) + bytes(1))
    with pytest.raises(FormatError, match="bad magic"):
        load_idx(img_path, lbl_path)


def test_writer_validation(tmp_path):
    with pytest.raises(FormatError):
        write_idx_images(tmp_path / "x.idx", np.zeros((2, 2), dtype=np.uint8))
    with pytest.raises(FormatError):
        write_idx_labels(tmp_path / "y.idx", np.array([300]))
