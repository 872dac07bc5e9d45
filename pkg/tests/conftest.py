import struct

import numpy as np
import pytest

from randlab.datasets import load_mnist_idx

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def write_idx_images(path, images):
    """Write uint8 images of shape (n, rows, cols) as an IDX file."""
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">iiii", IMAGE_MAGIC, n, rows, cols))
        fh.write(images.tobytes())


def write_idx_labels(path, labels):
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">ii", LABEL_MAGIC, len(labels)))
        fh.write(labels.tobytes())


# 5x7 digit bitmaps; rendered with jitter and noise they make a small
# self-contained stand-in corpus in the classic 28x28 digit format, so
# the image pipeline runs without any external download.
_DIGIT_ROWS = {
    0: ("01110", "10001", "10011", "10101", "11001", "10001", "01110"),
    1: ("00100", "01100", "00100", "00100", "00100", "00100", "01110"),
    2: ("01110", "10001", "00001", "00010", "00100", "01000", "11111"),
    3: ("11111", "00010", "00100", "00010", "00001", "10001", "01110"),
    4: ("00010", "00110", "01010", "10010", "11111", "00010", "00010"),
    5: ("11111", "10000", "11110", "00001", "00001", "10001", "01110"),
    6: ("00110", "01000", "10000", "11110", "10001", "10001", "01110"),
    7: ("11111", "00001", "00010", "00100", "01000", "01000", "01000"),
    8: ("01110", "10001", "10001", "01110", "10001", "10001", "01110"),
    9: ("01110", "10001", "10001", "01111", "00001", "00010", "01100"),
}

_BITMAPS = {
    digit: np.array([[int(c) for c in row] for row in rows], dtype=np.float64)
    for digit, rows in _DIGIT_ROWS.items()
}


def render_digit(digit, rng):
    """One 28x28 uint8 image: scaled glyph + position jitter + noise."""
    glyph = np.kron(_BITMAPS[digit], np.ones((3, 3)))  # 21x15
    canvas = np.zeros((28, 28), dtype=np.float64)
    top = 3 + rng.integers(-3, 4)
    left = 6 + rng.integers(-3, 4)
    canvas[top : top + 21, left : left + 15] = glyph * rng.uniform(0.6, 1.0)
    canvas += rng.normal(0.0, 0.08, size=(28, 28))
    return (canvas.clip(0.0, 1.0) * 255.0).round().astype(np.uint8)


def make_digit_corpus(count, rng):
    labels = np.arange(count, dtype=np.uint8) % 10
    images = np.stack([render_digit(int(d), rng) for d in labels])
    return images, labels


@pytest.fixture(scope="session")
def digit_idx_dir(tmp_path_factory):
    """IDX files of 2000 training and 500 test digit images."""
    root = tmp_path_factory.mktemp("digits")
    rng = np.random.default_rng(20240817)
    train_images, train_labels = make_digit_corpus(2000, rng)
    test_images, test_labels = make_digit_corpus(500, rng)
    paths = {
        "train_images": root / "train-images-idx3-ubyte",
        "train_labels": root / "train-labels-idx1-ubyte",
        "test_images": root / "t10k-images-idx3-ubyte",
        "test_labels": root / "t10k-labels-idx1-ubyte",
    }
    write_idx_images(paths["train_images"], train_images)
    write_idx_labels(paths["train_labels"], train_labels)
    write_idx_images(paths["test_images"], test_images)
    write_idx_labels(paths["test_labels"], test_labels)
    return paths


@pytest.fixture(scope="session")
def digit_datasets(digit_idx_dir):
    train = load_mnist_idx(
        digit_idx_dir["train_images"], digit_idx_dir["train_labels"]
    )
    test = load_mnist_idx(
        digit_idx_dir["test_images"], digit_idx_dir["test_labels"]
    )
    return train, test
