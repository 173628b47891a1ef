"""Training façade, five-way probability averaging, and evaluation harness."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .engine import par_map, partition, run_tasks
from .errors import (
    EmptyTestSet,
    InsufficientClassCount,
    InvalidDistribution,
    InvalidParams,
    LengthMismatch,
    WrongArity,
    ZeroVector,
)
from .knn import DistanceMetric, build_knowledge_base, knn_classify
from .linear_svm import SvmHyperParams, predict_ovr, train_ovr
from .mlp import AdamConfig, NetParams, TrainingMasterConfig, predict_mlp, train_parameter_averaging
from .naive_bayes import predict_nb, train_nb
from .random_forest import predict_rf, train_rf
from .text_pipeline import (
    FeatureVector,
    LabeledPhrase,
    LabelSet,
    Vocabulary,
    build_vocabulary,
    encode,
    encode_corpus,
)

KINDS = ("nb", "knn", "svm", "rf", "mlp")
# argument order of the five-way mean
ENSEMBLE_ORDER = ("nb", "knn", "svm", "rf", "mlp")
# row order of the printed score tables
TABLE_ROWS = (("NaiveBayes", "nb"), ("RandomForest", "rf"), ("DNN", "mlp"), ("SVM", "svm"), ("KNN", "knn"))

DIST_TOL = 1e-9


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 42
    partitions: int = 4
    alpha: float = 1.0
    k: int = 1
    metric: str = "cosine"
    reg_lambda: float = 1e-3
    learning_rate: float = 0.1
    iterations: int = 200
    n_trees: int = 100
    max_depth: int = 16
    subset_size: int | None = None
    units: int = 128
    batch_size: int = 32
    epochs: int = 1
    workers: int = 4
    averaging_frequency: int = 5
    mlp_learning_rate: float = 1e-3

    def __post_init__(self):
        if self.partitions < 1:
            raise InvalidParams("partitions must be >= 1")
        DistanceMetric(self.metric)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def check_distribution(p, n: int | None = None, tol: float = DIST_TOL) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or (n is not None and arr.size != n):
        raise LengthMismatch(f"expected a length-{n} vector, got shape {arr.shape}")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidDistribution("probabilities must be finite and non-negative")
    if abs(arr.sum() - 1.0) > tol:
        raise InvalidDistribution(f"probabilities sum to {arr.sum():.6f}, not 1")
    return arr


def ensemble_average(scores: Sequence, tol: float = DIST_TOL) -> np.ndarray:
    """Element-wise mean of exactly five class-probability vectors.

    ``tol`` bounds how far each input's sum may stray from 1; loosen it only
    for display-rounded inputs.
    """
    if len(scores) != 5:
        raise WrongArity(f"expected 5 score vectors, got {len(scores)}")
    n = len(np.asarray(scores[0]))
    arrs = [check_distribution(s, n, tol) for s in scores]
    # sorting each column makes the sum independent of argument order
    stacked = np.sort(np.stack(arrs), axis=0)
    return stacked.sum(axis=0) / 5.0


def argmax_label(probs: np.ndarray, label_set: LabelSet) -> str:
    return label_set.labels[int(np.argmax(probs))]


def uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


@dataclass(eq=False)
class TrainedModel:
    """A single classifier or the full five-member ensemble, ready to predict."""

    kind: str  # one of KINDS or "ensemble"
    members: dict  # kind -> model object
    vocabulary: Vocabulary
    label_set: LabelSet
    config: TrainConfig = field(default_factory=TrainConfig)

    def member_scores(self, x: FeatureVector) -> dict[str, np.ndarray]:
        return {kind: self._score(kind, x) for kind in self.members}

    def _score(self, kind: str, x: FeatureVector) -> np.ndarray:
        model = self.members[kind]
        if kind == "nb":
            return predict_nb(model, x)
        if kind == "knn":
            try:
                return knn_classify(model, x, self.config.k, self.config.metric)
            except ZeroVector:
                return uniform(len(self.label_set))
        if kind == "svm":
            return predict_ovr(model, x)
        if kind == "rf":
            return predict_rf(model, x)
        if kind == "mlp":
            return predict_mlp(model, x)
        raise InvalidParams(f"unknown model kind {kind!r}")

    def predict_vector(self, x: FeatureVector) -> np.ndarray:
        if self.kind == "ensemble":
            scores = self.member_scores(x)
            return ensemble_average([scores[k] for k in ENSEMBLE_ORDER])
        return self._score(self.kind, x)

    def predict_proba(self, text: str) -> np.ndarray:
        return self.predict_vector(encode(text, self.vocabulary))

    def predict(self, text: str) -> tuple[np.ndarray, str]:
        probs = self.predict_proba(text)
        return probs, argmax_label(probs, self.label_set)


def predict_ensemble(model: TrainedModel, text: str) -> tuple[np.ndarray, str]:
    if model.kind != "ensemble":
        raise InvalidParams("predict_ensemble needs an ensemble model")
    return model.predict(text)


def _train_member(kind: str, data, label_set: LabelSet, cfg: TrainConfig):
    if kind == "nb":
        return train_nb(data, label_set, cfg.alpha)
    if kind == "knn":
        return build_knowledge_base(data, label_set)
    if kind == "svm":
        hp = SvmHyperParams(cfg.reg_lambda, cfg.learning_rate, cfg.iterations, cfg.seed)
        return train_ovr(data, label_set, hp)
    if kind == "rf":
        return train_rf(data, label_set, cfg.n_trees, cfg.subset_size, cfg.max_depth, cfg.seed)
    if kind == "mlp":
        master = TrainingMasterConfig(cfg.workers, cfg.averaging_frequency, cfg.batch_size)
        net = NetParams(cfg.units, cfg.epochs, AdamConfig(learning_rate=cfg.mlp_learning_rate))
        return train_parameter_averaging(data, len(label_set), master, net, cfg.seed)
    raise InvalidParams(f"unknown model kind {kind!r}")


def train(
    kind: str,
    corpus: Sequence[LabeledPhrase],
    cfg: TrainConfig = TrainConfig(),
    label_set: LabelSet | None = None,
) -> TrainedModel:
    """Build the vocabulary from ``corpus`` and train one kind, or all five."""
    if kind != "ensemble" and kind not in KINDS:
        raise InvalidParams(f"unknown algorithm {kind!r}")
    vocab = build_vocabulary(corpus)
    if label_set is None:
        label_set = LabelSet.from_labels(p.label for p in corpus)
    data = partition(encode_corpus(corpus, vocab, label_set), cfg.partitions)
    kinds = KINDS if kind == "ensemble" else (kind,)
    trained = run_tasks([lambda k=k: _train_member(k, data, label_set, cfg) for k in kinds])
    return TrainedModel(kind, dict(zip(kinds, trained)), vocab, label_set, cfg)


@dataclass
class EvalReport:
    accuracy: float
    confusion: np.ndarray
    per_fold: list[float]
    label_set: LabelSet

    def render(self) -> str:
        labels = self.label_set.labels
        lines = []
        for i, acc in enumerate(self.per_fold, start=1):
            lines.append(f"fold {i}: accuracy {acc:.4f}")
        lines.append(f"mean accuracy: {self.accuracy:.4f}")
        lines.append("confusion (rows = true, columns = predicted):")
        width = max(len(lab) for lab in labels)
        cell = max(width, len(str(int(self.confusion.max(initial=0)))))
        lines.append(" " * (width + 1) + " ".join(lab.rjust(cell) for lab in labels))
        for lab, row in zip(labels, self.confusion):
            lines.append(lab.ljust(width) + " " + " ".join(str(int(v)).rjust(cell) for v in row))
        return "\n".join(lines)


def evaluate(model: TrainedModel, test: Sequence[LabeledPhrase]) -> EvalReport:
    if not test:
        raise EmptyTestSet("test set is empty")
    n = len(model.label_set)
    pairs = partition(list(test), model.config.partitions)
    predicted = par_map(
        pairs, lambda p: (model.label_set.index[p.label], int(np.argmax(model.predict_proba(p.text))))
    ).collect()
    confusion = np.zeros((n, n), dtype=np.int64)
    for true, pred in predicted:
        confusion[true, pred] += 1
    acc = float(np.trace(confusion) / confusion.sum())
    return EvalReport(acc, confusion, [acc], model.label_set)


def stratified_folds(corpus: Sequence[LabeledPhrase], folds: int, seed: int) -> list[list[int]]:
    """Per class (in label order): shuffle indices, deal round-robin into folds."""
    if folds < 2:
        raise InvalidParams("folds must be >= 2")
    label_set = LabelSet.from_labels(p.label for p in corpus)
    by_class: dict[str, list[int]] = {lab: [] for lab in label_set.labels}
    for i, p in enumerate(corpus):
        by_class[p.label].append(i)
    short = {lab: len(ix) for lab, ix in by_class.items() if len(ix) < folds}
    if short:
        raise InsufficientClassCount(f"classes with fewer than {folds} examples: {short}")
    rng = np.random.default_rng(seed)
    assignment: list[list[int]] = [[] for _ in range(folds)]
    for lab in label_set.labels:
        idx = np.array(by_class[lab])
        for j, i in enumerate(rng.permutation(idx)):
            assignment[j % folds].append(int(i))
    return [sorted(f) for f in assignment]


def cross_validate(
    corpus: Sequence[LabeledPhrase], folds: int, kind: str = "ensemble", cfg: TrainConfig = TrainConfig()
) -> EvalReport:
    corpus = list(corpus)
    fold_idx = stratified_folds(corpus, folds, cfg.seed)
    label_set = LabelSet.from_labels(p.label for p in corpus)
    n = len(label_set)
    confusion = np.zeros((n, n), dtype=np.int64)
    per_fold = []
    for held in fold_idx:
        held_set = set(held)
        train_part = [p for i, p in enumerate(corpus) if i not in held_set]
        test_part = [corpus[i] for i in held]
        model = train(kind, train_part, cfg, label_set)
        report = evaluate(model, test_part)
        confusion += report.confusion
        per_fold.append(report.accuracy)
    return EvalReport(float(np.mean(per_fold)), confusion, per_fold, label_set)


def round_for_display(probs: np.ndarray, decimals: int = 3) -> np.ndarray:
    """Round to ``decimals`` places by largest remainder, so a distribution
    still sums to exactly 1 at display precision."""
    scale = 10 ** decimals
    scaled = np.asarray(probs, dtype=np.float64) * scale
    floors = np.floor(scaled)
    target = int(round(scaled.sum()))
    short = target - int(floors.sum())
    if short > 0:
        order = np.argsort(-(scaled - floors), kind="stable")
        floors[order[:short]] += 1
    return floors / scale


@dataclass
class ScoreTable:
    phrase: str
    labels: tuple[str, ...]
    rows: list[tuple[str, np.ndarray]]

    def display_rows(self) -> list[tuple[str, np.ndarray]]:
        return [(name, round_for_display(v)) for name, v in self.rows]

    def to_text(self) -> str:
        rows = self.display_rows()
        name_w = max(len(n) for n, _ in rows)
        widths = [max(len(lab), 5) for lab in self.labels]
        out = [f'Accuracy "{self.phrase}"']
        out.append(" " * name_w + "  " + "  ".join(lab.rjust(w) for lab, w in zip(self.labels, widths)))
        for name, vals in rows:
            cells = "  ".join(f"{v:.3f}".rjust(w) for v, w in zip(vals, widths))
            out.append(f"{name.ljust(name_w)}  {cells}")
        return "\n".join(out)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["phrase", "model", *self.labels])
        for name, vals in self.display_rows():
            writer.writerow([self.phrase, name, *(f"{v:.3f}" for v in vals)])
        return buf.getvalue()


def score_table(model: TrainedModel, text: str) -> ScoreTable:
    if model.kind != "ensemble":
        raise InvalidParams("score tables need an ensemble model")
    x = encode(text, model.vocabulary)
    scores = model.member_scores(x)
    ens = ensemble_average([scores[k] for k in ENSEMBLE_ORDER])
    rows = [(name, scores[kind]) for name, kind in TABLE_ROWS]
    rows.append(("ENSEMBLE", ens))
    return ScoreTable(text, model.label_set.labels, rows)

