"""Corpus ingestion and bag-of-words term-frequency encoding."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyCorpus, EmptyVocabulary, MalformedLine

# \w minus underscore == Unicode letters and digits (plus a few digit-like marks)
_SPLIT = re.compile(r"[\W_]+", re.UNICODE)


@dataclass(frozen=True)
class LabeledPhrase:
    label: str
    text: str

    def __post_init__(self):
        if not self.label:
            raise ValueError("label must be non-empty")
        if not self.text.strip():
            raise ValueError("text must be non-empty after trimming")


@dataclass(frozen=True)
class LabelSet:
    """Distinct class identifiers in lexicographic order."""

    labels: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels")
        if list(labels) != sorted(labels):
            raise ValueError("labels must be in lexicographic order")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "index", {lab: i for i, lab in enumerate(labels)})

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "LabelSet":
        return cls(tuple(sorted(set(labels))))

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        if len(set(terms)) != len(terms):
            raise ValueError("duplicate terms")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "index", {t: i for i, t in enumerate(terms)})

    @property
    def dim(self) -> int:
        return len(self.terms)


class FeatureVector:
    """Sparse vector: strictly increasing dimensions, nonzero finite values.

    ``vectorize`` only ever produces positive term counts; other nonzero
    values are allowed so the classifiers can be exercised on arbitrary
    points.  The backing arrays are read-only.
    """

    __slots__ = ("indices", "counts", "dim")

    def __init__(self, indices, counts, dim: int):
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        cnt = np.asarray(counts, dtype=np.float64).reshape(-1)
        if idx.shape != cnt.shape:
            raise ValueError("indices and counts differ in length")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("dimensions must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= dim:
                raise ValueError("dimension out of range")
            if np.any(cnt == 0) or not np.all(np.isfinite(cnt)):
                raise ValueError("stored values must be nonzero and finite")
        idx.flags.writeable = False
        cnt.flags.writeable = False
        self.indices = idx
        self.counts = cnt
        self.dim = int(dim)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]], dim: int) -> "FeatureVector":
        """Build from (dimension, count) pairs in any order; repeated dims are summed."""
        acc: dict[int, float] = {}
        for d, c in pairs:
            acc[int(d)] = acc.get(int(d), 0.0) + float(c)
        items = sorted((d, c) for d, c in acc.items() if c != 0)
        return cls([d for d, _ in items], [c for _, c in items], dim)

    @classmethod
    def from_dense(cls, values: Sequence[float]) -> "FeatureVector":
        arr = np.asarray(values, dtype=np.float64)
        nz = np.flatnonzero(arr)
        return cls(nz, arr[nz], arr.size)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.counts.tolist()))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float64)
        out[self.indices] = self.counts
        return out

    def get(self, dim_index: int) -> float:
        pos = np.searchsorted(self.indices, dim_index)
        if pos < self.indices.size and self.indices[pos] == dim_index:
            return float(self.counts[pos])
        return 0.0

    def check_dim(self, dim: int) -> None:
        if self.dim != dim:
            raise DimensionMismatch(dim, self.dim)

    def __eq__(self, other):
        if not isinstance(other, FeatureVector):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.counts, other.counts)
        )

    def __hash__(self):
        return hash((self.dim, self.indices.tobytes(), self.counts.tobytes()))

    def __repr__(self):
        return f"FeatureVector({self.entries}, dim={self.dim})"


def tokenize(text: str) -> list[str]:
    return [t for t in _SPLIT.split(text.lower()) if t]


def build_vocabulary(corpus: Sequence[LabeledPhrase]) -> Vocabulary:
    if not corpus:
        raise EmptyCorpus("cannot build a vocabulary from an empty corpus")
    terms: set[str] = set()
    for phrase in corpus:
        terms.update(tokenize(phrase.text))
    if not terms:
        raise EmptyVocabulary("corpus contains no alphanumeric tokens")
    return Vocabulary(tuple(sorted(terms)))


def vectorize(tokens: Iterable[str], vocab: Vocabulary) -> FeatureVector:
    counts = Counter(vocab.index[t] for t in tokens if t in vocab.index)
    dims = sorted(counts)
    return FeatureVector(dims, [counts[d] for d in dims], vocab.dim)


def encode(text: str, vocab: Vocabulary) -> FeatureVector:
    return vectorize(tokenize(text), vocab)


def encode_corpus(
    corpus: Sequence[LabeledPhrase], vocab: Vocabulary, labels: LabelSet
) -> list[tuple[int, FeatureVector]]:
    """Turn phrases into (label ordinal, FeatureVector) pairs."""
    return [(labels.index[p.label], encode(p.text, vocab)) for p in corpus]


def parse_corpus(lines: Iterable[str]) -> list[LabeledPhrase]:
    out = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedLine(line_no)
        label, text = parts[0].strip(), parts[1]
        if not label or not text.strip():
            raise MalformedLine(line_no, "empty label or text")
        out.append(LabeledPhrase(label, text))
    if not out:
        raise EmptyCorpus("corpus file has no records")
    return out


def load_corpus(path: str | Path) -> list[LabeledPhrase]:
    """Read a UTF-8 `label<TAB>text` file. Raises OSError if unreadable."""
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def write_corpus(corpus: Iterable[LabeledPhrase], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in corpus:
            fh.write(f"{p.label}\t{p.text}\n")
