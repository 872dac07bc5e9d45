"""Dataset loading, synthesis, and partitioning.

All randomized operations (shuffles, splits, folds, blob noise) draw
from an injected entropy source, never from a global RNG, so every
partition is replayable bit for bit.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass

import numpy as np

from randlab.errors import (
    BadMagic,
    ClassTooSmall,
    CountMismatch,
    EmptyFile,
    FormatError,
    InvalidParams,
    KTooLarge,
    MissingLabelColumn,
    ParseError,
    TruncatedFile,
)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass
class Dataset:
    """A fixed table of real features with dense integer class labels."""

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    feature_names: list | None = None
    label_names: list | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise InvalidParams("features must be a 2-d matrix")
        n, v = self.features.shape
        if n < 1 or v < 1:
            raise InvalidParams("need at least one row and one feature")
        if len(self.labels) != n:
            raise InvalidParams("labels length must match row count")
        if self.class_count < 2:
            raise InvalidParams("need at least two classes")
        if not np.all(np.isfinite(self.features)):
            raise InvalidParams("features must be finite")
        if self.labels.min() < 0 or self.labels.max() >= self.class_count:
            raise InvalidParams("labels must lie in [0, class_count)")

    @property
    def n_rows(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]


@dataclass
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray
    fraction: float


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray  # row index -> fold index

    def test_indices(self, fold):
        return np.where(self.assignments == fold)[0]

    def train_indices(self, fold):
        return np.where(self.assignments != fold)[0]


def take(dataset, indices):
    """Row-subset a dataset, keeping its class universe."""
    indices = np.asarray(indices, dtype=np.int64)
    return Dataset(
        features=dataset.features[indices],
        labels=dataset.labels[indices],
        class_count=dataset.class_count,
        feature_names=dataset.feature_names,
        label_names=dataset.label_names,
    )


def load_csv(path, label_column):
    """Read a headered CSV of finite reals plus one label column.

    Labels become dense indices in first-appearance order; the original
    names are kept on the Dataset.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path}: no header row") from None
        header = [name.strip() for name in header]
        if label_column not in header:
            raise MissingLabelColumn(
                f"{path}: no column named {label_column!r} in {header}"
            )
        label_at = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != label_at]

        rows = []
        labels = []
        label_names = []
        label_index = {}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    line_no, len(row), f"expected {len(header)} cells, got {len(row)}"
                )
            values = []
            for col_no, cell in enumerate(row, start=1):
                if col_no - 1 == label_at:
                    continue
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(line_no, col_no, f"not a number: {cell!r}") from None
                if not math.isfinite(value):
                    raise ParseError(line_no, col_no, f"non-finite value: {cell!r}")
                values.append(value)
            name = row[label_at].strip()
            if name not in label_index:
                label_index[name] = len(label_names)
                label_names.append(name)
            labels.append(label_index[name])
            rows.append(values)

    if not rows:
        raise EmptyFile(f"{path}: header but no data rows")
    return Dataset(
        features=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        class_count=max(2, len(label_names)),
        feature_names=feature_names,
        label_names=label_names,
    )


def write_csv(dataset, path, label_column="label"):
    """Inverse of load_csv for round-trip checks and small exports.

    Features reload exactly (repr round-trips doubles). Labels reload
    exactly when class ids first appear in ascending row order, as in
    any class-major dataset (synth_blobs); otherwise they come back
    consistently relabeled by first appearance.
    """
    names = dataset.feature_names or [
        f"f{i}" for i in range(dataset.n_features)
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + [label_column])
        for row, label in zip(dataset.features, dataset.labels):
            if dataset.label_names:
                tag = dataset.label_names[label]
            else:
                tag = str(int(label))
            writer.writerow([repr(float(x)) for x in row] + [tag])


def _read_idx_header(blob, path, expected_magic, dims):
    need = 4 * (1 + dims)
    if len(blob) < need:
        raise TruncatedFile(f"{path}: shorter than its {need}-byte header")
    fields = struct.unpack(f">{1 + dims}i", blob[:need])
    if fields[0] != expected_magic:
        raise BadMagic(
            f"{path}: magic 0x{fields[0]:08X}, expected 0x{expected_magic:08X}"
        )
    return fields[1:], blob[need:]


def load_mnist_idx(images_path, labels_path, limit=None, class_count=10):
    """Load an IDX image/label file pair as flat [0,1] pixel rows.

    The format is the classic big-endian digit container: image magic
    0x00000803 with count/rows/cols, label magic 0x00000801 with count.
    """
    with open(images_path, "rb") as fh:
        image_blob = fh.read()
    with open(labels_path, "rb") as fh:
        label_blob = fh.read()

    (image_count, rows, cols), pixels = _read_idx_header(
        image_blob, images_path, IMAGE_MAGIC, 3
    )
    (label_count,), label_bytes = _read_idx_header(
        label_blob, labels_path, LABEL_MAGIC, 1
    )
    if image_count != label_count:
        raise CountMismatch(
            f"{image_count} images but {label_count} labels"
        )
    if len(pixels) < image_count * rows * cols:
        raise TruncatedFile(f"{images_path}: pixel data shorter than promised")
    if len(label_bytes) < label_count:
        raise TruncatedFile(f"{labels_path}: label data shorter than promised")

    n = image_count if limit is None else min(limit, image_count)
    width = rows * cols
    features = (
        np.frombuffer(pixels[: n * width], dtype=np.uint8)
        .astype(np.float64)
        .reshape(n, width)
        / 255.0
    )
    labels = np.frombuffer(label_bytes[:n], dtype=np.uint8).astype(np.int64)
    if len(labels) and labels.max() >= class_count:
        raise FormatError(
            f"{labels_path}: label {labels.max()} outside 0..{class_count - 1}"
        )
    return Dataset(features=features, labels=labels, class_count=class_count)


def _gaussians(source, count):
    """Standard normals via Box-Muller over bounded uniform draws.

    u1 = 0 would need log(0), so zero draws are rejected and redrawn.
    """
    out = np.empty(count, dtype=np.float64)
    filled = 0
    while filled < count:
        u1 = source.next_bounded(0.0, 1.0)
        if u1 == 0.0:
            continue
        u2 = source.next_bounded(0.0, 1.0)
        radius = math.sqrt(-2.0 * math.log(u1))
        out[filled] = radius * math.cos(2.0 * math.pi * u2)
        filled += 1
        if filled < count:
            out[filled] = radius * math.sin(2.0 * math.pi * u2)
            filled += 1
    return out


def synth_blobs(class_count, per_class, n_features, spread, source):
    """Gaussian class blobs: class c sits at (2c, 2c, ...) with noise of
    std `spread`. Rows are emitted class by class."""
    if class_count < 2 or per_class < 1 or n_features < 1 or spread <= 0:
        raise InvalidParams(
            "need class_count >= 2, per_class >= 1, n_features >= 1, spread > 0"
        )
    n = class_count * per_class
    noise = _gaussians(source, n * n_features).reshape(n, n_features)
    centers = np.repeat(
        2.0 * np.arange(class_count, dtype=np.float64), per_class
    )[:, None]
    features = centers + spread * noise
    labels = np.repeat(np.arange(class_count, dtype=np.int64), per_class)
    return Dataset(features=features, labels=labels, class_count=class_count)


def _bounded_index(source, bound):
    """Uniform integer in [0, bound) by rejection, avoiding modulo bias."""
    limit = (2**32 // bound) * bound
    while True:
        word = source.next_uint(32)
        if word < limit:
            return word % bound


def shuffled_indices(n, source):
    """Fisher-Yates permutation of range(n) driven by the source."""
    indices = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = _bounded_index(source, i + 1)
        indices[i], indices[j] = indices[j], indices[i]
    return indices


def _per_class_indices(labels, class_count):
    return [np.where(labels == c)[0] for c in range(class_count)]


def stratified_split(dataset, fraction, source):
    """Per-class shuffle, then fill a train set of round(fraction * n)
    rows with largest-remainder apportionment across classes."""
    if not 0.0 < fraction < 1.0:
        raise InvalidParams(f"fraction must be in (0, 1), got {fraction}")
    by_class = _per_class_indices(dataset.labels, dataset.class_count)
    for c, indices in enumerate(by_class):
        if len(indices) < 2:
            raise ClassTooSmall(f"class {c} has {len(indices)} rows, needs >= 2")

    targets = [fraction * len(indices) for indices in by_class]
    counts = [int(math.floor(t)) for t in targets]
    want_total = int(math.floor(fraction * dataset.n_rows + 0.5))
    short = want_total - sum(counts)
    # hand the leftover slots to the largest remainders, ties broken
    # toward the lowest class index
    order = sorted(
        range(len(by_class)), key=lambda c: (-(targets[c] - counts[c]), c)
    )
    for c in order[:short]:
        counts[c] += 1

    train_parts = []
    test_parts = []
    for c, indices in enumerate(by_class):
        shuffled = indices[shuffled_indices(len(indices), source)]
        train_parts.append(shuffled[: counts[c]])
        test_parts.append(shuffled[counts[c] :])
    return SplitPlan(
        train_indices=np.concatenate(train_parts),
        test_indices=np.concatenate(test_parts),
        fraction=fraction,
    )


def k_folds(dataset, k, source):
    """Stratified folds: per-class shuffle, then one round-robin counter
    running across classes so fold sizes stay within 1 globally."""
    if not isinstance(k, int) or k < 2:
        raise InvalidParams(f"k must be an integer >= 2, got {k!r}")
    if k > dataset.n_rows:
        raise KTooLarge(f"{k} folds but only {dataset.n_rows} rows")
    assignments = np.empty(dataset.n_rows, dtype=np.int64)
    counter = 0
    for indices in _per_class_indices(dataset.labels, dataset.class_count):
        shuffled = indices[shuffled_indices(len(indices), source)]
        for row in shuffled:
            assignments[row] = counter % k
            counter += 1
    return FoldPlan(k=k, assignments=assignments)
