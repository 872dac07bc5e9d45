"""Random-tree induction and bagged forests.

The only stochastic ingredient is the entropy source: it picks the K
candidate attributes at every node and, for forests, the bootstrap
rows. Feed two trainings the same recorded bit stream and they build
the same model, whatever label the stream carries.

Draw order is fixed so streams replay: for a forest, each tree first
draws its n bootstrap rows, then its split attributes, depth-first,
left child before right. Within a node the K draws happen after the
purity and identical-rows checks, so a node that becomes a leaf for
either reason consumes no bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from randlab.errors import EmptyDataset, FormatError, InvalidConfig, WidthMismatch

_GAIN_EPS = 1e-12  # gains at or below this are float noise, not signal


@dataclass(frozen=True)
class TreeConfig:
    """Induction knobs.

    k_attributes None means automatic: floor(log2(v)) + 1. The last
    three fields document features that are deliberately disabled:
    depth is never limited, pruning never runs, and the variance
    stopping rule sits at -inf. Setting them to anything else raises,
    because no code would honor the value.
    """

    k_attributes: int | None = None
    max_depth: int | None = None
    pruning: str = "none"
    min_variance: float = float("-inf")

    def __post_init__(self):
        if self.k_attributes is not None and self.k_attributes < 1:
            raise InvalidConfig("k_attributes must be >= 1 or None for auto")
        if self.max_depth is not None:
            raise InvalidConfig("depth limiting is disabled; max_depth stays None")
        if self.pruning != "none":
            raise InvalidConfig("pruning is disabled")
        if self.min_variance != float("-inf"):
            raise InvalidConfig("the variance stopping rule is disabled")

    def resolve_k(self, n_features):
        if self.k_attributes is None:
            return n_features.bit_length()  # floor(log2 v) + 1
        return min(self.k_attributes, n_features)


@dataclass
class TreeNode:
    """Leaf (class_counts set) or internal split (everything else set).

    Left child holds rows with feature value <= threshold. Roots also
    carry the training width and class universe for later checks.
    """

    class_counts: np.ndarray | None = None
    attribute: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    n_features: int | None = None
    class_count: int | None = None

    @property
    def is_leaf(self):
        return self.class_counts is not None


@dataclass
class ForestModel:
    trees: list
    config: TreeConfig | None = None

    @property
    def tree_count(self):
        return len(self.trees)


def _entropy_of(counts):
    total = counts.sum()
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _draw_attributes(source, n_features, k):
    """K distinct attribute indices: each draw picks a slot of the
    still-available pool by next_uint(32) mod remaining, then the slot
    is refilled from the pool's end (swap removal)."""
    pool = list(range(n_features))
    chosen = []
    for d in range(k):
        pos = source.next_uint(32) % (n_features - d)
        chosen.append(pool[pos])
        pool[pos] = pool[n_features - d - 1]
    return chosen


def _best_threshold(values, labels, class_count, parent_entropy):
    """Best information-gain threshold for one attribute, or None when
    the attribute is constant on these rows.

    Candidates are midpoints of consecutive distinct sorted values; on
    equal gain the lowest threshold wins.
    """
    n = len(values)
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    boundaries = np.nonzero(sorted_values[:-1] != sorted_values[1:])[0]
    if len(boundaries) == 0:
        return None

    onehot = np.zeros((n, class_count), dtype=np.float64)
    onehot[np.arange(n), labels[order]] = 1.0
    prefix = onehot.cumsum(axis=0)

    left_counts = prefix[boundaries]
    left_n = (boundaries + 1).astype(np.float64)
    right_counts = prefix[-1] - left_counts
    right_n = n - left_n

    def side_entropy(counts, totals):
        p = counts / totals[:, None]
        terms = np.zeros_like(p)
        mask = p > 0.0
        terms[mask] = p[mask] * np.log2(p[mask])
        return -terms.sum(axis=1)

    gains = parent_entropy - (
        left_n / n * side_entropy(left_counts, left_n)
        + right_n / n * side_entropy(right_counts, right_n)
    )
    best = int(np.argmax(gains))  # first max = lowest threshold
    position = int(boundaries[best])
    low = float(sorted_values[position])
    high = float(sorted_values[position + 1])
    threshold = (low + high) / 2.0
    if threshold >= high:
        # midpoint rounded up onto the upper value; the lower value
        # realizes the intended partition under the <= rule
        threshold = low
    return float(gains[best]), threshold


def _grow(features, labels, indices, config, k, class_count, source):
    counts = np.bincount(labels[indices], minlength=class_count)
    if np.count_nonzero(counts) == 1:
        return TreeNode(class_counts=counts)
    rows = features[indices]
    if bool(np.all(rows == rows[0])):
        return TreeNode(class_counts=counts)

    chosen = _draw_attributes(source, features.shape[1], k)
    parent_entropy = _entropy_of(counts)
    node_labels = labels[indices]
    best_gain = -1.0
    best_attr = None
    best_threshold = None
    for attr in sorted(chosen):
        found = _best_threshold(
            rows[:, attr], node_labels, class_count, parent_entropy
        )
        if found is None:
            continue
        gain, threshold = found
        if gain > best_gain:
            best_gain, best_attr, best_threshold = gain, attr, threshold

    if best_attr is None or best_gain <= _GAIN_EPS:
        return TreeNode(class_counts=counts)

    mask = rows[:, best_attr] <= best_threshold
    left = _grow(features, labels, indices[mask], config, k, class_count, source)
    right = _grow(features, labels, indices[~mask], config, k, class_count, source)
    return TreeNode(
        attribute=best_attr, threshold=best_threshold, left=left, right=right
    )


def train_random_tree(train, config, source):
    """Grow one unpruned random tree on the full training set."""
    if train.n_rows == 0:
        raise EmptyDataset("cannot train a tree on zero rows")
    k = config.resolve_k(train.n_features)
    root = _grow(
        train.features,
        train.labels,
        np.arange(train.n_rows, dtype=np.int64),
        config,
        k,
        train.class_count,
        source,
    )
    root.n_features = train.n_features
    root.class_count = train.class_count
    return root


def predict_tree(tree, row):
    """Descend by threshold comparisons; at a leaf, majority class with
    ties to the lowest index."""
    row = np.asarray(row, dtype=np.float64)
    if tree.n_features is not None and len(row) != tree.n_features:
        raise WidthMismatch(
            f"row has {len(row)} features, tree was trained on {tree.n_features}"
        )
    node = tree
    while not node.is_leaf:
        node = node.left if row[node.attribute] <= node.threshold else node.right
    return int(np.argmax(node.class_counts))


def train_forest(train, tree_count, config, source, bootstrap=True):
    """Bag `tree_count` trees from one shared source.

    Each tree draws its bootstrap of n rows (next_uint(32) mod n, with
    replacement) and then its splits; trees are grown in order. The
    bootstrap flag exists for tests that need a forest of trees trained
    on the full set.
    """
    if train.n_rows == 0:
        raise EmptyDataset("cannot train a forest on zero rows")
    if tree_count < 1:
        raise EmptyDataset(f"tree_count must be >= 1, got {tree_count}")
    n = train.n_rows
    k = config.resolve_k(train.n_features)
    trees = []
    for _ in range(tree_count):
        if bootstrap:
            bag = np.array(
                [source.next_uint(32) % n for _ in range(n)], dtype=np.int64
            )
        else:
            bag = np.arange(n, dtype=np.int64)
        root = _grow(
            train.features, train.labels, bag, config, k, train.class_count, source
        )
        root.n_features = train.n_features
        root.class_count = train.class_count
        trees.append(root)
    return ForestModel(trees=trees, config=config)


def _leaf_width(node):
    while not node.is_leaf:
        node = node.left
    return len(node.class_counts)


def predict_forest(model, row):
    first = model.trees[0]
    class_count = first.class_count or _leaf_width(first)
    votes = np.zeros(class_count, dtype=np.int64)
    for tree in model.trees:
        votes[predict_tree(tree, row)] += 1
    return int(np.argmax(votes))


def evaluate(model, test):
    """Fraction of correct predictions on a test set."""
    if test.n_rows == 0:
        raise EmptyDataset("cannot evaluate on zero rows")
    is_forest = isinstance(model, ForestModel)
    correct = 0
    for row, label in zip(test.features, test.labels):
        guess = predict_forest(model, row) if is_forest else predict_tree(model, row)
        correct += guess == label
    return correct / test.n_rows


def _write_node(node, lines, next_id):
    """Emit preorder `node <id> ...` lines; returns this node's id."""
    my_id = next_id[0]
    next_id[0] += 1
    if node.is_leaf:
        counts = " ".join(str(int(c)) for c in node.class_counts)
        lines.append(f"node {my_id} leaf {counts}")
        return my_id
    slot = len(lines)
    lines.append(None)  # patched once child ids are known
    left_id = _write_node(node.left, lines, next_id)
    right_id = _write_node(node.right, lines, next_id)
    lines[slot] = (
        f"node {my_id} split {node.attribute} {node.threshold!r} "
        f"{left_id} {right_id}"
    )
    return my_id


def serialize_tree(tree):
    lines = [f"tree v={tree.n_features} classes={tree.class_count}"]
    _write_node(tree, lines, [0])
    return "\n".join(lines) + "\n"


def _parse_header(line, expected):
    parts = line.split()
    if not parts or parts[0] != expected:
        raise FormatError(f"expected a {expected!r} header, got {line!r}")
    fields = dict(p.split("=", 1) for p in parts[1:] if "=" in p)
    try:
        return {key: int(value) for key, value in fields.items()}
    except ValueError:
        raise FormatError(f"bad header field in {line!r}") from None


def _parse_nodes(lines, class_count):
    nodes = {}
    for line in lines:
        parts = line.split()
        if len(parts) < 3 or parts[0] != "node":
            raise FormatError(f"bad node line: {line!r}")
        node_id = int(parts[1])
        if parts[2] == "leaf":
            counts = np.array([int(c) for c in parts[3:]], dtype=np.int64)
            if len(counts) != class_count:
                raise FormatError(
                    f"leaf {node_id} has {len(counts)} counts, expected {class_count}"
                )
            nodes[node_id] = TreeNode(class_counts=counts)
        elif parts[2] == "split":
            if len(parts) != 7:
                raise FormatError(f"bad split line: {line!r}")
            attr, threshold, left_id, right_id = parts[3:7]
            nodes[node_id] = (int(attr), float(threshold), int(left_id), int(right_id))
        else:
            raise FormatError(f"unknown node tag {parts[2]!r}")

    def build(node_id):
        entry = nodes.get(node_id)
        if entry is None:
            raise FormatError(f"missing node {node_id}")
        if isinstance(entry, TreeNode):
            return entry
        attr, threshold, left_id, right_id = entry
        return TreeNode(
            attribute=attr,
            threshold=threshold,
            left=build(left_id),
            right=build(right_id),
        )

    return build(0)


def parse_tree(text):
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise FormatError("empty tree serialization")
    header = _parse_header(lines[0], "tree")
    if "v" not in header or "classes" not in header:
        raise FormatError("tree header must carry v= and classes=")
    root = _parse_nodes(lines[1:], header["classes"])
    root.n_features = header["v"]
    root.class_count = header["classes"]
    return root


def serialize_forest(model):
    first = model.trees[0]
    out = [f"forest trees={model.tree_count} v={first.n_features} "
           f"classes={first.class_count}"]
    for index, tree in enumerate(model.trees):
        out.append(f"tree {index}")
        _write_node(tree, out, [0])
    return "\n".join(out) + "\n"


def parse_forest(text):
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise FormatError("empty forest serialization")
    header = _parse_header(lines[0], "forest")
    for key in ("trees", "v", "classes"):
        if key not in header:
            raise FormatError(f"forest header must carry {key}=")
    groups = []
    current = None
    for line in lines[1:]:
        if line.startswith("tree "):
            current = []
            groups.append(current)
        elif current is None:
            raise FormatError(f"node line before any tree marker: {line!r}")
        else:
            current.append(line)
    if len(groups) != header["trees"]:
        raise FormatError(
            f"header promises {header['trees']} trees, found {len(groups)}"
        )
    trees = []
    for group in groups:
        root = _parse_nodes(group, header["classes"])
        root.n_features = header["v"]
        root.class_count = header["classes"]
        trees.append(root)
    return ForestModel(trees=trees)
