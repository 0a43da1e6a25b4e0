"""IDX-format image/label loading and binary digit-pair preparation.

Files are the classic big-endian IDX format (magic 0x00000803 for
ubyte image tensors, 0x00000801 for ubyte label vectors), optionally
gzip-compressed when the path ends in ``.gz``.  Pixels are kept as raw
0..255 values until a pair dataset is built, at which point they are
mapped affinely to [-1, 1].
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DataError",
    "IdxFormatError",
    "DatasetConsistencyError",
    "RawDataset",
    "PairDataset",
    "load_idx",
    "save_idx",
    "normalize_pixels",
    "make_pair_dataset",
]

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


class DataError(Exception):
    """Base class for dataset problems."""


class IdxFormatError(DataError):
    """Bad magic number or malformed IDX header."""


class DatasetConsistencyError(DataError):
    """Images and labels disagree, or a requested class is empty."""


@dataclass(frozen=True)
class RawDataset:
    """Flattened images (count, rows*cols) as float64 0..255, plus labels."""

    images: np.ndarray
    labels: np.ndarray
    rows: int
    cols: int

    @property
    def count(self) -> int:
        return self.images.shape[0]

    @property
    def dim(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class PairDataset:
    """Binary task for digits (d1, d2): normalized samples in [-1, 1],
    labels are the original digit values."""

    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    d1: int
    d2: int
    rows: int
    cols: int

    @property
    def dim(self) -> int:
        return self.train_x.shape[1]


def _open(path, mode):
    path = str(path)
    if path.endswith(".gz"):
        return gzip.open(path, mode)
    return open(path, mode)


def _read_exact(fh, n: int, path) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise EOFError(f"{path}: truncated (wanted {n} bytes, got {len(buf)})")
    return buf


def _load_images(path) -> tuple[np.ndarray, int, int]:
    with _open(path, "rb") as fh:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(fh, 16, path))
        if magic != IMAGES_MAGIC:
            raise IdxFormatError(
                f"{path}: magic 0x{magic:08x}, expected 0x{IMAGES_MAGIC:08x}"
            )
        raw = _read_exact(fh, count * rows * cols, path)
    images = np.frombuffer(raw, dtype=np.uint8).astype(float)
    return images.reshape(count, rows * cols), rows, cols


def _load_labels(path) -> np.ndarray:
    with _open(path, "rb") as fh:
        magic, count = struct.unpack(">II", _read_exact(fh, 8, path))
        if magic != LABELS_MAGIC:
            raise IdxFormatError(
                f"{path}: magic 0x{magic:08x}, expected 0x{LABELS_MAGIC:08x}"
            )
        raw = _read_exact(fh, count, path)
    return np.frombuffer(raw, dtype=np.uint8).astype(int)


def load_idx(images_path, labels_path) -> RawDataset:
    """Load an image/label file pair; raises IdxFormatError on bad magic,
    EOFError on truncation, DatasetConsistencyError on count mismatch."""
    images, rows, cols = _load_images(images_path)
    labels = _load_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise DatasetConsistencyError(
            f"{images.shape[0]} images vs {labels.shape[0]} labels"
        )
    return RawDataset(images=images, labels=labels, rows=rows, cols=cols)


def save_idx(raw: RawDataset, images_path, labels_path):
    """Write a RawDataset back out in IDX format (gzipped iff the path
    ends in .gz).  Pixel values must be integers in 0..255."""
    images = np.asarray(raw.images)
    if images.min() < 0 or images.max() > 255 or np.any(images != np.round(images)):
        raise ValueError("images must hold integer values in 0..255")
    with _open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGES_MAGIC, raw.count, raw.rows, raw.cols))
        fh.write(images.astype(np.uint8).tobytes())
    with _open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", LABELS_MAGIC, raw.count))
        fh.write(np.asarray(raw.labels).astype(np.uint8).tobytes())


def normalize_pixels(v: np.ndarray) -> np.ndarray:
    """Map raw 0..255 to [-1, 1] via v / 127.5 - 1."""
    return np.asarray(v, dtype=float) / 127.5 - 1.0


def make_pair_dataset(
    raw_train: RawDataset,
    raw_test: RawDataset,
    d1: int,
    d2: int,
    seed: int = 0,
) -> PairDataset:
    """Pool both source splits, keep digits d1 and d2, normalize, and
    deterministically re-split 3:1 (n_train = (3*n)//4) after a seeded
    shuffle."""
    if d1 == d2:
        raise ValueError("d1 and d2 must differ")
    for d in (d1, d2):
        if not 0 <= d <= 9:
            raise ValueError(f"digit {d} outside 0..9")
    if (raw_train.rows, raw_train.cols) != (raw_test.rows, raw_test.cols):
        raise DatasetConsistencyError("source splits have different image shapes")

    images = np.concatenate([raw_train.images, raw_test.images], axis=0)
    labels = np.concatenate([raw_train.labels, raw_test.labels], axis=0)
    mask = (labels == d1) | (labels == d2)
    images, labels = images[mask], labels[mask]
    for d in (d1, d2):
        if not np.any(labels == d):
            raise DatasetConsistencyError(f"no examples of digit {d}")

    x = normalize_pixels(images)
    rng = np.random.default_rng(seed)
    order = rng.permutation(x.shape[0])
    x, labels = x[order], labels[order]
    n_train = (3 * x.shape[0]) // 4
    return PairDataset(
        train_x=x[:n_train],
        train_y=labels[:n_train],
        test_x=x[n_train:],
        test_y=labels[n_train:],
        d1=d1,
        d2=d2,
        rows=raw_train.rows,
        cols=raw_train.cols,
    )
