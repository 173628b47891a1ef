"""Linear soft-margin SVM, one-vs-rest for more than two classes.

Training is full-batch subgradient descent on the L2-regularized mean
hinge loss.  Each step sums per-example subgradients partition by
partition, so the partition count only affects floating-point summation
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .engine import PartitionedDataset, from_partitions, map_partitions, run_tasks
from .errors import DimensionMismatch, EmptyCorpus, InvalidParams, SingleClassCorpus
from .text_pipeline import FeatureVector, LabelSet


@dataclass(frozen=True)
class SvmHyperParams:
    reg_lambda: float = 1e-3
    learning_rate: float = 0.1
    iterations: int = 200
    seed: int = 42

    def __post_init__(self):
        if self.reg_lambda < 0:
            raise InvalidParams("reg_lambda must be >= 0")
        if self.learning_rate <= 0:
            raise InvalidParams("learning_rate must be > 0")
        if self.iterations < 1:
            raise InvalidParams("iterations must be >= 1")


@dataclass(frozen=True, eq=False)
class HyperplaneModel:
    w: np.ndarray
    b: float

    def __post_init__(self):
        if self.w.size == 0:
            raise InvalidParams("hyperplane needs dim > 0")
        if not np.all(np.isfinite(self.w)) or not math.isfinite(self.b):
            raise InvalidParams("non-finite hyperplane")

    @property
    def dim(self) -> int:
        return self.w.size


@dataclass(frozen=True, eq=False)
class OvRModel:
    per_class: tuple[HyperplaneModel, ...]
    label_set: LabelSet

    @property
    def dim(self) -> int:
        return self.per_class[0].dim


def decision(model: HyperplaneModel, x: FeatureVector) -> float:
    """Signed margin w.x + b; its sign is the binary class."""
    if x.dim != model.dim:
        raise DimensionMismatch(model.dim, x.dim)
    return float(model.w[x.indices] @ x.counts + model.b)


def _to_csr(vectors, dim: int) -> sp.csr_matrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        if v.dim != dim:
            raise DimensionMismatch(dim, v.dim)
        indptr[i + 1] = indptr[i] + v.nnz
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, np.int64)
    data = np.concatenate([v.counts for v in vectors]) if vectors else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))


def _feature_blocks(corpus: PartitionedDataset, dim: int):
    return map_partitions(corpus, lambda part: _to_csr([x for _, x in part], dim))


def _descend(blocks, targets, n: int, dim: int, hp: SvmHyperParams) -> HyperplaneModel:
    """Run the subgradient iterations over pre-built per-partition matrices."""
    work = from_partitions([[(X, y)] for X, y in zip(blocks, targets)])
    w = np.zeros(dim)
    b = 0.0

    for t in range(1, hp.iterations + 1):
        def partial_grad(part, w=w, b=b):
            (X, y), = part
            margins = y * (X @ w + b)
            active = margins < 1.0
            coef = np.where(active, -y, 0.0)
            return X.T @ coef, coef.sum()

        gw = np.zeros(dim)
        gb = 0.0
        for pw, pb in map_partitions(work, partial_grad):
            gw += pw
            gb += pb
        gw = gw / n + 2.0 * hp.reg_lambda * w
        gb = gb / n
        step = hp.learning_rate / math.sqrt(t)
        w = w - step * gw
        b = b - step * gb
    return HyperplaneModel(w, float(b))


def _dim_and_size(corpus: PartitionedDataset) -> tuple[int, int]:
    examples = corpus.collect()
    if not examples:
        raise EmptyCorpus("SVM needs at least one training example")
    return examples[0][1].dim, len(examples)


def train_binary_svm(corpus: PartitionedDataset, hp: SvmHyperParams = SvmHyperParams()) -> HyperplaneModel:
    """``corpus`` holds ``(sign, FeatureVector)`` with sign in {-1, +1}."""
    dim, n = _dim_and_size(corpus)
    signs = {s for s, _ in corpus.collect()}
    if not signs <= {-1, 1}:
        raise InvalidParams("binary labels must be -1 or +1")
    if len(signs) < 2:
        raise SingleClassCorpus("binary SVM needs both a positive and a negative example")
    blocks = _feature_blocks(corpus, dim)
    targets = map_partitions(corpus, lambda part: np.array([s for s, _ in part], dtype=np.float64))
    return _descend(blocks, targets, n, dim, hp)


def train_ovr(
    corpus: PartitionedDataset, label_set: LabelSet, hp: SvmHyperParams = SvmHyperParams()
) -> OvRModel:
    """One binary SVM per label: that label +1, every other label -1."""
    dim, n = _dim_and_size(corpus)
    present = {lab for lab, _ in corpus.collect()}
    if len(present) < 2:
        raise SingleClassCorpus("one-vs-rest needs at least two classes in the corpus")
    blocks = _feature_blocks(corpus, dim)
    ordinals = map_partitions(corpus, lambda part: np.array([lab for lab, _ in part], dtype=np.int64))

    def train_class(j):
        targets = [np.where(o == j, 1.0, -1.0) for o in ordinals]
        return _descend(blocks, targets, n, dim, hp)

    models = run_tasks([lambda j=j: train_class(j) for j in range(len(label_set))])
    return OvRModel(tuple(models), label_set)


def margins_ovr(model: OvRModel, x: FeatureVector) -> np.ndarray:
    return np.array([decision(m, x) for m in model.per_class])


def one_hot_argmax(scores: np.ndarray) -> np.ndarray:
    out = np.zeros(len(scores))
    out[int(np.argmax(scores))] = 1.0  # argmax returns the first maximum
    return out


def predict_ovr(model: OvRModel, x: FeatureVector) -> np.ndarray:
    return one_hot_argmax(margins_ovr(model, x))


def svm_objective(model: HyperplaneModel, examples, reg_lambda: float) -> float:
    """lambda*|w|^2 + mean hinge loss over ``(sign, FeatureVector)`` pairs."""
    hinge = [max(0.0, 1.0 - s * decision(model, x)) for s, x in examples]
    return reg_lambda * float(model.w @ model.w) + sum(hinge) / len(hinge)
