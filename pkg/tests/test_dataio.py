"""IDX parsing, error paths, normalization, and the deterministic pooled
re-split."""

import gzip
import struct

import numpy as np
import pytest

from sparsefront.dataio import (
    DataError,
    DatasetConsistencyError,
    IdxFormatError,
    RawDataset,
    load_idx,
    make_pair_dataset,
    normalize_pixels,
    save_idx,
)


def _toy_raw(count=12, rows=4, cols=3, seed=0):
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 256, size=(count, rows * cols)).astype(float)
    labels = rng.integers(0, 10, size=count)
    return RawDataset(images=images, labels=labels, rows=rows, cols=cols)


def _write_pair(tmp_path, raw, suffix=""):
    img = tmp_path / f"images-idx3-ubyte{suffix}"
    lab = tmp_path / f"labels-idx1-ubyte{suffix}"
    save_idx(raw, img, lab)
    return img, lab


def test_round_trip_plain_and_gzip(tmp_path):
    raw = _toy_raw()
    for suffix in ("", ".gz"):
        img, lab = _write_pair(tmp_path, raw, suffix)
        back = load_idx(img, lab)
        assert np.array_equal(back.images, raw.images)
        assert np.array_equal(back.labels, raw.labels)
        assert (back.rows, back.cols) == (raw.rows, raw.cols)


def test_bad_image_magic(tmp_path):
    img, lab = _write_pair(tmp_path, _toy_raw())
    data = bytearray(img.read_bytes())
    data[3] = 0x42
    img.write_bytes(bytes(data))
    with pytest.raises(IdxFormatError):
        load_idx(img, lab)


def test_bad_label_magic(tmp_path):
    img, lab = _write_pair(tmp_path, _toy_raw())
    data = bytearray(lab.read_bytes())
    data[3] = 0x42
    lab.write_bytes(bytes(data))
    with pytest.raises(IdxFormatError):
        load_idx(img, lab)


def test_truncated_image_payload(tmp_path):
    img, lab = _write_pair(tmp_path, _toy_raw())
    data = img.read_bytes()
    img.write_bytes(data[:-5])
    with pytest.raises(EOFError):
        load_idx(img, lab)


def test_truncated_gzip_payload(tmp_path):
    raw = _toy_raw()
    img, lab = _write_pair(tmp_path, raw, ".gz")
    payload = struct.pack(">IIII", 0x803, raw.count, raw.rows, raw.cols)
    payload += bytes(5)  # far fewer pixels than the header promises
    img.write_bytes(gzip.compress(payload))
    with pytest.raises(EOFError):
        load_idx(img, lab)


def test_count_mismatch(tmp_path):
    raw = _toy_raw()
    img, _ = _write_pair(tmp_path, raw)
    short = RawDataset(
        images=raw.images[:-1], labels=raw.labels[:-1], rows=raw.rows, cols=raw.cols
    )
    img2, lab2 = _write_pair(tmp_path, short, ".short")
    with pytest.raises(DatasetConsistencyError):
        load_idx(img, lab2)
    assert issubclass(DatasetConsistencyError, DataError)
    assert issubclass(IdxFormatError, DataError)


def test_save_idx_validates_pixel_range(tmp_path):
    raw = _toy_raw()
    bad = RawDataset(
        images=raw.images + 0.5, labels=raw.labels, rows=raw.rows, cols=raw.cols
    )
    with pytest.raises(ValueError):
        save_idx(bad, tmp_path / "i", tmp_path / "l")
    bad2 = RawDataset(
        images=raw.images - 300.0, labels=raw.labels, rows=raw.rows, cols=raw.cols
    )
    with pytest.raises(ValueError):
        save_idx(bad2, tmp_path / "i", tmp_path / "l")


def test_normalize_endpoints():
    v = np.array([0.0, 127.5, 255.0])
    assert np.allclose(normalize_pixels(v), [-1.0, 0.0, 1.0])


def _pair_sources(seed=1):
    rng = np.random.default_rng(seed)

    def make(count):
        images = rng.integers(0, 256, size=(count, 16)).astype(float)
        labels = rng.choice([3, 7, 9], size=count)
        return RawDataset(images=images, labels=labels, rows=4, cols=4)

    return make(80), make(40)


def test_pair_dataset_split_and_normalization():
    tr, te = _pair_sources()
    pair = make_pair_dataset(tr, te, 3, 7, seed=0)
    n = np.sum((tr.labels == 3) | (tr.labels == 7)) + np.sum(
        (te.labels == 3) | (te.labels == 7)
    )
    assert pair.train_x.shape[0] == (3 * n) // 4
    assert pair.train_x.shape[0] + pair.test_x.shape[0] == n
    assert set(pair.train_y) | set(pair.test_y) <= {3, 7}
    assert pair.train_x.min() >= -1.0 and pair.train_x.max() <= 1.0
    assert pair.dim == 16


def test_pair_dataset_deterministic_and_seed_sensitive():
    tr, te = _pair_sources()
    a = make_pair_dataset(tr, te, 3, 7, seed=0)
    b = make_pair_dataset(tr, te, 3, 7, seed=0)
    c = make_pair_dataset(tr, te, 3, 7, seed=1)
    assert np.array_equal(a.train_x, b.train_x)
    assert np.array_equal(a.test_y, b.test_y)
    assert not np.array_equal(a.train_y, c.train_y)


def test_pair_dataset_validation():
    tr, te = _pair_sources()
    with pytest.raises(ValueError):
        make_pair_dataset(tr, te, 3, 3)
    with pytest.raises(ValueError):
        make_pair_dataset(tr, te, 3, 11)
    with pytest.raises(DatasetConsistencyError):
        make_pair_dataset(tr, te, 3, 4)  # digit 4 never generated
    other = RawDataset(images=te.images, labels=te.labels, rows=2, cols=8)
    with pytest.raises(DatasetConsistencyError):
        make_pair_dataset(tr, other, 3, 7)


@pytest.mark.mnist
def test_mnist_pair_shapes(mnist_pair):
    assert mnist_pair.train_x.shape == (10825, 784)
    assert mnist_pair.test_x.shape == (3609, 784)
    assert mnist_pair.rows == mnist_pair.cols == 28
    assert set(mnist_pair.train_y) == {3, 7}
