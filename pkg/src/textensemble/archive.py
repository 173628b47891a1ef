"""Single-file model archive shared by every model kind.

Layout (all integers little-endian)::

    8 bytes   magic b"TXENSARC"
    u32       format version
    u64       header length H
    H bytes   UTF-8 JSON header (kind, vocabulary, labels, config, array index, CRC32)
    ...       payload: raw arrays, '<f8' for floats and '<i8' for integers

The version is checked before anything else is parsed.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from .engine import from_partitions
from .ensemble import KINDS, TrainConfig, TrainedModel
from .errors import ArchiveError
from .knn import KnnKnowledgeBase
from .linear_svm import HyperplaneModel, OvRModel
from .mlp import MLPModel
from .naive_bayes import NBModel
from .random_forest import DecisionTree, ForestModel
from .text_pipeline import FeatureVector, LabelSet, Vocabulary

MAGIC = b"TXENSARC"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<8sIQ")


class _Writer:
    def __init__(self):
        self.index: list[dict] = []
        self.chunks: list[bytes] = []
        self.offset = 0

    def add(self, name: str, arr) -> None:
        arr = np.asarray(arr)
        dtype = "<i8" if np.issubdtype(arr.dtype, np.integer) else "<f8"
        data = np.ascontiguousarray(arr, dtype=dtype).tobytes()
        self.index.append({"name": name, "dtype": dtype, "shape": list(arr.shape),
                           "offset": self.offset, "nbytes": len(data)})
        self.chunks.append(data)
        self.offset += len(data)


def _dump_member(kind: str, model, w: _Writer, prefix: str) -> dict:
    p = f"{prefix}{kind}/"
    if kind == "nb":
        w.add(p + "log_priors", model.log_priors)
        w.add(p + "log_likelihoods", model.log_likelihoods)
        return {"smoothing": model.smoothing}
    if kind == "knn":
        parts = model.instances.partitions
        vecs = [v for part in parts for _, v in part]
        w.add(p + "sizes", [len(part) for part in parts])
        w.add(p + "labels", [lab for part in parts for lab, _ in part])
        w.add(p + "nnz", [v.nnz for v in vecs])
        w.add(p + "indices", np.concatenate([v.indices for v in vecs]) if vecs else np.zeros(0, np.int64))
        w.add(p + "counts", np.concatenate([v.counts for v in vecs]) if vecs else np.zeros(0))
        return {"dim": model.dim}
    if kind == "svm":
        w.add(p + "w", np.stack([h.w for h in model.per_class]))
        w.add(p + "b", [h.b for h in model.per_class])
        return {}
    if kind == "rf":
        trees = model.trees
        w.add(p + "tree_sizes", [t.n_nodes for t in trees])
        for field in ("feature", "threshold", "left", "right", "value"):
            w.add(p + field, np.concatenate([getattr(t, field) for t in trees]))
        return {"feature_subset_size": model.feature_subset_size, "max_depth": model.max_depth,
                "dim": model.dim, "seed": model.seed}
    if kind == "mlp":
        for name, arr in model.params().items():
            w.add(p + name, arr)
        return {"seed": model.seed}
    raise ArchiveError(f"unknown model kind {kind!r}")


def _load_member(kind: str, meta: dict, arrays: dict, prefix: str, label_set: LabelSet):
    p = f"{prefix}{kind}/"
    a = lambda name: arrays[p + name]  # noqa: E731
    if kind == "nb":
        return NBModel(a("log_priors"), a("log_likelihoods"), float(meta["smoothing"]), label_set)
    if kind == "knn":
        dim = int(meta["dim"])
        nnz = a("nnz")
        ends = np.cumsum(nnz)
        starts = ends - nnz
        idx, cnt, labels = a("indices"), a("counts"), a("labels").tolist()
        items = [(labels[i], FeatureVector(idx[s:e], cnt[s:e], dim)) for i, (s, e) in enumerate(zip(starts, ends))]
        parts, start = [], 0
        for size in a("sizes").tolist():
            parts.append(items[start:start + size])
            start += size
        return KnnKnowledgeBase(from_partitions(parts), label_set, dim)
    if kind == "svm":
        W, b = a("w"), a("b")
        return OvRModel(tuple(HyperplaneModel(W[j].copy(), float(b[j])) for j in range(W.shape[0])), label_set)
    if kind == "rf":
        sizes = a("tree_sizes").tolist()
        fields = {f: a(f) for f in ("feature", "threshold", "left", "right", "value")}
        trees, start = [], 0
        for size in sizes:
            trees.append(DecisionTree(**{f: v[start:start + size].copy() for f, v in fields.items()}))
            start += size
        return ForestModel(tuple(trees), int(meta["feature_subset_size"]), int(meta["max_depth"]),
                           label_set, int(meta["dim"]), int(meta["seed"]))
    if kind == "mlp":
        return MLPModel(a("W1"), a("b1"), a("W2"), a("b2"), int(meta["seed"]))
    raise ArchiveError(f"unknown model kind {kind!r}")


def dumps(model: TrainedModel) -> bytes:
    w = _Writer()
    members_meta = {kind: _dump_member(kind, m, w, "") for kind, m in model.members.items()}
    payload = b"".join(w.chunks)
    header = {
        "model_kind": model.kind,
        "members": members_meta,
        "vocabulary": list(model.vocabulary.terms),
        "labels": list(model.label_set.labels),
        "config": model.config.to_dict(),
        "seed": model.config.seed,
        "arrays": w.index,
        "payload_crc32": zlib.crc32(payload),
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(head)) + head + payload


def loads(blob: bytes) -> TrainedModel:
    if len(blob) < _PREAMBLE.size:
        raise ArchiveError("archive truncated")
    magic, version, head_len = _PREAMBLE.unpack_from(blob)
    if magic != MAGIC:
        raise ArchiveError("not a model archive (bad magic)")
    if version != FORMAT_VERSION:
        raise ArchiveError(f"unsupported archive format version {version} (expected {FORMAT_VERSION})")
    start = _PREAMBLE.size
    try:
        header = json.loads(blob[start:start + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArchiveError(f"corrupted archive header: {exc}") from None
    payload = blob[start + head_len:]
    if zlib.crc32(payload) != header.get("payload_crc32"):
        raise ArchiveError("corrupted archive payload (checksum mismatch)")

    try:
        kind = header["model_kind"]
        members_meta = header["members"]
        expected = set(KINDS) if kind == "ensemble" else {kind}
        if set(members_meta) != expected:
            raise ArchiveError(f"payload members {sorted(members_meta)} do not match kind {kind!r}")
        arrays = {}
        for entry in header["arrays"]:
            raw = payload[entry["offset"]:entry["offset"] + entry["nbytes"]]
            arr = np.frombuffer(raw, dtype=entry["dtype"]).reshape(entry["shape"])
            arrays[entry["name"]] = arr.astype(arr.dtype.newbyteorder("="))
        vocab = Vocabulary(tuple(header["vocabulary"]))
        label_set = LabelSet(tuple(header["labels"]))
        members = {k: _load_member(k, members_meta[k], arrays, "", label_set) for k in sorted(expected)}
        cfg = TrainConfig.from_dict(header["config"])
    except ArchiveError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ArchiveError(f"inconsistent archive: {exc}") from None

    for m in members.values():
        dim = getattr(m, "dim", vocab.dim)
        if dim != vocab.dim:
            raise ArchiveError("model dimension does not match the stored vocabulary")
    ordered = {k: members[k] for k in (KINDS if kind == "ensemble" else (kind,))}
    return TrainedModel(kind, ordered, vocab, label_set, cfg)


def save(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_bytes(dumps(model))


def load(path: str | Path) -> TrainedModel:
    return loads(Path(path).read_bytes())
