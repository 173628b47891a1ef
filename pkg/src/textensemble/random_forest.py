"""Bagged CART trees with per-node random feature subsets (random forest)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import PartitionedDataset, par_map, partition, pool_size
from .errors import DimensionMismatch, EmptyCorpus, InvalidParams
from .text_pipeline import FeatureVector, LabelSet

LEAF = -1


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Array-backed tree; node 0 is the root.

    ``feature[i] == LEAF`` marks a leaf whose class is ``value[i]``;
    otherwise samples with ``x[feature[i]] <= threshold[i]`` go to ``left[i]``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def depth(self, node: int = 0) -> int:
        if self.feature[node] == LEAF:
            return 0
        return 1 + max(self.depth(int(self.left[node])), self.depth(int(self.right[node])))

    def predict_dense(self, x: np.ndarray) -> int:
        node = 0
        feature, threshold = self.feature, self.threshold
        while feature[node] != LEAF:
            node = self.left[node] if x[feature[node]] <= threshold[node] else self.right[node]
        return int(self.value[node])


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    feature_subset_size: int
    max_depth: int
    label_set: LabelSet
    dim: int
    seed: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p * p).sum())


def best_split(values: np.ndarray, labels: np.ndarray, n_classes: int):
    """Lowest weighted Gini over midpoints between sorted distinct values.

    Returns ``(weighted_impurity, threshold)`` or ``None`` when the feature
    is constant on these samples.
    """
    distinct, inverse = np.unique(values, return_inverse=True)
    if distinct.size < 2:
        return None
    # class histogram per distinct value; term counts have few distinct values
    hist = np.bincount(inverse * n_classes + labels, minlength=distinct.size * n_classes)
    hist = hist.reshape(distinct.size, n_classes).astype(np.float64)
    left = np.cumsum(hist, axis=0)[:-1]
    right = hist.sum(axis=0) - left
    n_left = left.sum(axis=1)
    n_right = right.sum(axis=1)
    g_left = 1.0 - ((left / n_left[:, None]) ** 2).sum(axis=1)
    g_right = 1.0 - ((right / n_right[:, None]) ** 2).sum(axis=1)
    weighted = (n_left * g_left + n_right * g_right) / values.size
    k = int(np.argmin(weighted))
    return float(weighted[k]), float((distinct[k] + distinct[k + 1]) / 2.0)


def _majority(counts: np.ndarray) -> int:
    return int(np.argmax(counts))  # first maximum == lowest ordinal


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    sample: np.ndarray,
    n_classes: int,
    m: int,
    max_depth: int,
    rng: np.random.Generator,
) -> DecisionTree:
    """Grow one tree depth-first (pre-order) over the rows listed in ``sample``."""
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(-1)
        return len(feature) - 1

    root = new_node()
    stack = [(root, sample, 0)]
    while stack:
        node, rows, depth = stack.pop()
        labels = y[rows]
        counts = np.bincount(labels, minlength=n_classes).astype(np.float64)
        value[node] = _majority(counts)
        parent = gini(counts)
        if parent == 0.0 or depth >= max_depth:
            continue
        candidates = rng.choice(X.shape[1], size=m, replace=False)
        best = None
        for f in candidates:
            found = best_split(X[rows, f], labels, n_classes)
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], found[1], int(f))
        if best is None or not best[0] < parent:
            continue
        _, thr, f = best
        go_left = X[rows, f] <= thr
        feature[node] = f
        threshold[node] = thr
        lnode, rnode = new_node(), new_node()
        left[node], right[node] = lnode, rnode
        # right pushed first so the left subtree is expanded first
        stack.append((rnode, rows[~go_left], depth + 1))
        stack.append((lnode, rows[go_left], depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.int64),
    )


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, tree_index])


def default_subset_size(dim: int) -> int:
    return max(1, math.ceil(math.sqrt(dim)))


def train_rf(
    corpus: PartitionedDataset,
    label_set: LabelSet,
    n_trees: int = 100,
    m: int | None = None,
    max_depth: int = 16,
    seed: int = 42,
) -> ForestModel:
    examples = corpus.collect()
    if not examples:
        raise EmptyCorpus("random forest needs at least one training example")
    dim = examples[0][1].dim
    if m is None:
        m = default_subset_size(dim)
    if n_trees < 1 or max_depth < 1 or not 1 <= m <= dim:
        raise InvalidParams(f"need n_trees >= 1, max_depth >= 1, 1 <= m <= {dim}")

    X = np.zeros((len(examples), dim))
    y = np.empty(len(examples), dtype=np.int64)
    for i, (label, vec) in enumerate(examples):
        if vec.dim != dim:
            raise DimensionMismatch(dim, vec.dim)
        X[i, vec.indices] = vec.counts
        y[i] = label
    n = len(examples)
    n_classes = len(label_set)

    def build(tree_index: int) -> DecisionTree:
        rng = tree_rng(seed, tree_index)
        sample = rng.integers(0, n, size=n)
        return grow_tree(X, y, sample, n_classes, m, max_depth, rng)

    trees = par_map(partition(range(n_trees), max(1, pool_size())), build).collect()
    return ForestModel(tuple(trees), m, max_depth, label_set, dim, seed)


def tree_votes(model: ForestModel, x: FeatureVector) -> np.ndarray:
    if x.dim != model.dim:
        raise DimensionMismatch(model.dim, x.dim)
    dense = x.to_dense()
    return np.bincount(
        [t.predict_dense(dense) for t in model.trees], minlength=len(model.label_set)
    )


def predict_rf(model: ForestModel, x: FeatureVector) -> np.ndarray:
    return tree_votes(model, x) / model.n_trees
