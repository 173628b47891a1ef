"""Instance-based classification over a partitioned knowledge base.

The 1-NN path follows the distributed construction: distances from the
query to every stored phrase are computed partition by partition, reduced
to a per-label minimum, and the label with the smallest minimum wins.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .engine import PartitionedDataset, from_partitions, group_min_by_key, map_partitions, partition
from .errors import DimensionMismatch, EmptyCorpus, InvalidParams, ZeroVector
from .text_pipeline import FeatureVector, LabelSet

# rows densified per distance batch; bounds memory for wide vocabularies
_CHUNK_CELLS = 1 << 22


class DistanceMetric(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    CHEBYSHEV = "chebyshev"
    HAMMING = "hamming"
    COSINE = "cosine"


def _row_distances(metric: DistanceMetric, rows: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Distance from dense query ``q`` to each dense row.

    Every reduction runs along axis 1 independently per row, so a row's
    result does not depend on how many other rows share the batch.
    """
    metric = DistanceMetric(metric)
    if metric is DistanceMetric.COSINE:
        dots = (rows * q).sum(axis=1)
        sq_norms = (rows * rows).sum(axis=1)
        q_sq = (q * q).sum()
        # sqrt of the product (not product of sqrts) makes d(x, x) exactly 0
        out = 1.0 - dots / np.sqrt(sq_norms * q_sq)
        return np.maximum(out, 0.0)
    diff = rows - q
    if metric is DistanceMetric.EUCLIDEAN:
        return np.sqrt((diff * diff).sum(axis=1))
    if metric is DistanceMetric.MANHATTAN:
        return np.abs(diff).sum(axis=1)
    if metric is DistanceMetric.CHEBYSHEV:
        if diff.shape[1] == 0:
            return np.zeros(diff.shape[0])
        return np.abs(diff).max(axis=1)
    return (diff != 0).sum(axis=1).astype(np.float64)


def distance(metric: DistanceMetric | str, x: FeatureVector, y: FeatureVector) -> float:
    if x.dim != y.dim:
        raise DimensionMismatch(x.dim, y.dim)
    metric = DistanceMetric(metric)
    if metric is DistanceMetric.COSINE and (x.nnz == 0 or y.nnz == 0):
        raise ZeroVector("cosine distance is undefined for a zero vector")
    return float(_row_distances(metric, x.to_dense()[None, :], y.to_dense())[0])


class _Block:
    """One partition of the knowledge base as a dense count matrix."""

    def __init__(self, items):
        self.labels = np.array([lab for lab, _ in items], dtype=np.int64)
        self.vectors = [vec for _, vec in items]

    @cached_property
    def dense(self) -> np.ndarray:
        dim = self.vectors[0].dim if self.vectors else 0
        out = np.zeros((len(self.vectors), dim))
        for i, v in enumerate(self.vectors):
            out[i, v.indices] = v.counts
        return out

    @cached_property
    def nonzero(self) -> np.ndarray:
        return np.array([v.nnz > 0 for v in self.vectors], dtype=bool)

    def distances(self, metric: DistanceMetric, q: np.ndarray) -> np.ndarray:
        dense = self.dense
        if dense.shape[0] == 0:
            return np.zeros(0)
        step = max(1, _CHUNK_CELLS // max(1, dense.shape[1]))
        parts = [_row_distances(metric, dense[i:i + step], q) for i in range(0, dense.shape[0], step)]
        return np.concatenate(parts)


@dataclass(eq=False)
class KnnKnowledgeBase:
    instances: PartitionedDataset  # of (label ordinal, FeatureVector)
    label_set: LabelSet
    dim: int
    _blocks: list = field(init=False, repr=False)

    def __post_init__(self):
        self._blocks = [_Block(part) for part in self.instances.partitions]

    @property
    def blocks(self) -> PartitionedDataset:
        return from_partitions([[b] for b in self._blocks])

    def with_partitions(self, p: int) -> "KnnKnowledgeBase":
        return KnnKnowledgeBase(partition(self.instances.collect(), p), self.label_set, self.dim)


def build_knowledge_base(
    corpus: PartitionedDataset, label_set: LabelSet
) -> KnnKnowledgeBase:
    examples = corpus.collect()
    if not examples:
        raise EmptyCorpus("knowledge base needs at least one instance")
    dim = examples[0][1].dim
    for _, vec in examples:
        if vec.dim != dim:
            raise DimensionMismatch(dim, vec.dim)
    return KnnKnowledgeBase(corpus, label_set, dim)


def _labelled_distances(kb: KnnKnowledgeBase, query: FeatureVector, metric: DistanceMetric):
    """Partitioned (label, distance) pairs; zero-norm instances are skipped under cosine."""
    q = query.to_dense()
    cosine = metric is DistanceMetric.COSINE

    def per_block(part):
        (block,) = part
        d = block.distances(metric, q)
        keep = block.nonzero if cosine else np.ones(d.size, dtype=bool)
        return tuple(zip(block.labels[keep].tolist(), d[keep].tolist()))

    return from_partitions(map_partitions(kb.blocks, per_block))


def knn_classify(
    kb: KnnKnowledgeBase,
    query: FeatureVector,
    k: int = 1,
    metric: DistanceMetric | str = DistanceMetric.COSINE,
) -> np.ndarray:
    if k < 1:
        raise InvalidParams("k must be >= 1")
    if query.dim != kb.dim:
        raise DimensionMismatch(kb.dim, query.dim)
    metric = DistanceMetric(metric)
    if metric is DistanceMetric.COSINE and query.nnz == 0:
        raise ZeroVector("query has no in-vocabulary terms")

    n_classes = len(kb.label_set)
    pairs = _labelled_distances(kb, query, metric)
    out = np.zeros(n_classes)

    if k == 1:
        per_label = group_min_by_key(pairs)
        if not per_label:
            raise ZeroVector("knowledge base has no usable instances for cosine distance")
        best = min(per_label.values())
        # keys come back sorted, so the first hit is the lowest ordinal
        winner = next(lab for lab, d in per_label.items() if d == best)
        out[winner] = 1.0
        return out

    flat = pairs.collect()
    if not flat:
        raise ZeroVector("knowledge base has no usable instances for cosine distance")
    # stable sort by (distance, storage order) keeps selection deterministic
    order = sorted(range(len(flat)), key=lambda i: (flat[i][1], i))
    nearest = [flat[i][0] for i in order[:k]]
    votes = np.bincount(nearest, minlength=n_classes).astype(np.float64)
    return votes / len(nearest)
