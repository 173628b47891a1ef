"""Multinomial naive Bayes with additive (Laplace) smoothing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import PartitionedDataset, aggregate
from .errors import DimensionMismatch, EmptyCorpus, InvalidParams
from .text_pipeline import FeatureVector, LabelSet


@dataclass(frozen=True, eq=False)
class NBModel:
    log_priors: np.ndarray  # (n_classes,)
    log_likelihoods: np.ndarray  # (n_classes, dim)
    smoothing: float
    label_set: LabelSet

    @property
    def dim(self) -> int:
        return self.log_likelihoods.shape[1]


def _class_counts(corpus: PartitionedDataset, n_classes: int, dim: int):
    def zero():
        return np.zeros(n_classes), np.zeros((n_classes, dim))

    def add_example(acc, example):
        docs, terms = acc
        label, x = example
        if x.dim != dim:
            raise DimensionMismatch(dim, x.dim)
        docs[label] += 1
        terms[label, x.indices] += x.counts
        return acc

    def combine(a, b):
        return a[0] + b[0], a[1] + b[1]

    return aggregate(corpus, zero, add_example, combine)


def train_nb(
    corpus: PartitionedDataset, label_set: LabelSet, alpha: float = 1.0
) -> NBModel:
    """Estimate class priors and per-class term likelihoods.

    ``corpus`` holds ``(label ordinal, FeatureVector)`` pairs.  Counts are
    integers, so the aggregate is exact whatever the partitioning.
    """
    if alpha <= 0:
        raise InvalidParams("alpha must be > 0")
    examples = corpus.collect()
    if not examples:
        raise EmptyCorpus("naive Bayes needs at least one training example")
    dim = examples[0][1].dim
    n_classes = len(label_set)

    docs, terms = _class_counts(corpus, n_classes, dim)
    with np.errstate(divide="ignore"):
        log_priors = np.log(docs / docs.sum())
    totals = terms.sum(axis=1, keepdims=True)
    log_likelihoods = np.log(terms + alpha) - np.log(totals + alpha * dim)
    return NBModel(log_priors, log_likelihoods, float(alpha), label_set)


def joint_log_scores(model: NBModel, x: FeatureVector) -> np.ndarray:
    """Unnormalized log posterior per class."""
    if x.dim != model.dim:
        raise DimensionMismatch(model.dim, x.dim)
    return model.log_priors + model.log_likelihoods[:, x.indices] @ x.counts


def softmax_log(scores: np.ndarray) -> np.ndarray:
    shifted = np.exp(scores - scores.max())
    return shifted / shifted.sum()


def predict_nb(model: NBModel, x: FeatureVector) -> np.ndarray:
    return softmax_log(joint_log_scores(model, x))
