"""Single-hidden-layer network (ELU -> softmax) trained with Adam.

Distributed training follows the parameter-averaging scheme: the shuffled
corpus is cut into one shard per worker, every worker trains a private
replica on its own minibatches, and every ``averaging_frequency``
minibatches the replicas are replaced by their element-wise mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .engine import partition, run_tasks
from .errors import DimensionMismatch, EmptyCorpus, InvalidParams
from .text_pipeline import FeatureVector

PARAMS = ("W1", "b1", "W2", "b2")


@dataclass(frozen=True, eq=False)
class MLPModel:
    W1: np.ndarray  # (units, dim)
    b1: np.ndarray  # (units,)
    W2: np.ndarray  # (n_classes, units)
    b2: np.ndarray  # (n_classes,)
    seed: int = 0

    @property
    def units(self) -> int:
        return self.W1.shape[0]

    @property
    def dim(self) -> int:
        return self.W1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.W2.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAMS}

    def with_params(self, params: dict[str, np.ndarray]) -> "MLPModel":
        return replace(self, **params)


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass(frozen=True, eq=False)
class AdamState:
    m: dict
    v: dict
    t: int = 0
    config: AdamConfig = field(default_factory=AdamConfig)

    @classmethod
    def zeros_like(cls, model: MLPModel, config: AdamConfig = AdamConfig()) -> "AdamState":
        zeros = {k: np.zeros_like(p) for k, p in model.params().items()}
        return cls(zeros, {k: z.copy() for k, z in zeros.items()}, 0, config)


@dataclass(frozen=True)
class TrainingMasterConfig:
    worker_count: int = 1
    averaging_frequency: int = 5
    batch_size_per_worker: int = 32

    def __post_init__(self):
        if self.worker_count < 1 or self.averaging_frequency < 1 or self.batch_size_per_worker < 1:
            raise InvalidParams("worker_count, averaging_frequency and batch size must be >= 1")


@dataclass(frozen=True)
class NetParams:
    units: int = 128
    epochs: int = 1
    adam: AdamConfig = field(default_factory=AdamConfig)


def init_mlp(dim: int, units: int, n_classes: int, seed: int = 42) -> MLPModel:
    if min(dim, units, n_classes) < 1:
        raise InvalidParams("dim, units and n_classes must be positive")
    rng = np.random.default_rng(seed)
    lim1 = 1.0 / np.sqrt(dim)
    lim2 = 1.0 / np.sqrt(units)
    W1 = rng.uniform(-lim1, lim1, size=(units, dim))
    W2 = rng.uniform(-lim2, lim2, size=(n_classes, units))
    return MLPModel(W1, np.zeros(units), W2, np.zeros(n_classes), seed)


def elu(z: np.ndarray) -> np.ndarray:
    return np.where(z >= 0, z, np.expm1(np.minimum(z, 0.0)))


def elu_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z >= 0, 1.0, np.exp(np.minimum(z, 0.0)))


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def forward_dense(model: MLPModel, X: np.ndarray) -> np.ndarray:
    """Class probabilities for each row of a dense (batch, dim) input."""
    h = elu(X @ model.W1.T + model.b1)
    return softmax(h @ model.W2.T + model.b2)


def forward(model: MLPModel, x: FeatureVector) -> np.ndarray:
    if x.dim != model.dim:
        raise DimensionMismatch(model.dim, x.dim)
    h = elu(model.W1[:, x.indices] @ x.counts + model.b1)
    return softmax(h @ model.W2.T + model.b2)


def batch_to_dense(batch, dim: int) -> tuple[np.ndarray, np.ndarray]:
    X = np.zeros((len(batch), dim))
    y = np.empty(len(batch), dtype=np.int64)
    for i, (label, vec) in enumerate(batch):
        if vec.dim != dim:
            raise DimensionMismatch(dim, vec.dim)
        X[i, vec.indices] = vec.counts
        y[i] = label
    return X, y


def loss_and_grads(model: MLPModel, X: np.ndarray, y: np.ndarray):
    """Mean categorical cross-entropy and its exact gradient by backprop."""
    B = X.shape[0]
    z1 = X @ model.W1.T + model.b1
    h = elu(z1)
    p = softmax(h @ model.W2.T + model.b2)
    loss = -np.mean(np.log(p[np.arange(B), y]))

    dz2 = p.copy()
    dz2[np.arange(B), y] -= 1.0
    dz2 /= B
    dz1 = (dz2 @ model.W2) * elu_grad(z1)
    grads = {
        "W2": dz2.T @ h,
        "b2": dz2.sum(axis=0),
        "W1": dz1.T @ X,
        "b1": dz1.sum(axis=0),
    }
    return float(loss), grads


def adam_update(model: MLPModel, adam: AdamState, grads: dict) -> tuple[MLPModel, AdamState]:
    c = adam.config
    t = adam.t + 1
    m, v, new = {}, {}, {}
    for name, p in model.params().items():
        g = grads[name]
        m[name] = c.beta1 * adam.m[name] + (1.0 - c.beta1) * g
        v[name] = c.beta2 * adam.v[name] + (1.0 - c.beta2) * g * g
        m_hat = m[name] / (1.0 - c.beta1 ** t)
        v_hat = v[name] / (1.0 - c.beta2 ** t)
        new[name] = p - c.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps)
    return model.with_params(new), AdamState(m, v, t, c)


def train_step_adam(model: MLPModel, adam: AdamState, batch) -> tuple[MLPModel, AdamState]:
    """One Adam step on a batch of ``(label ordinal, FeatureVector)`` pairs."""
    if not batch:
        raise InvalidParams("batch must be non-empty")
    X, y = batch_to_dense(batch, model.dim)
    _, grads = loss_and_grads(model, X, y)
    return adam_update(model, adam, grads)


def tree_mean(arrays: list[np.ndarray]) -> np.ndarray:
    """Mean via pairwise summation; identical inputs come back bit-exact
    whenever the count is a power of two."""
    items = list(arrays)
    while len(items) > 1:
        paired = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            paired.append(items[-1])
        items = paired
    return items[0] / len(arrays)


def _average(replicas: list[tuple[MLPModel, AdamState]]) -> tuple[dict, dict, dict]:
    params = {k: tree_mean([m.params()[k] for m, _ in replicas]) for k in PARAMS}
    m = {k: tree_mean([a.m[k] for _, a in replicas]) for k in PARAMS}
    v = {k: tree_mean([a.v[k] for _, a in replicas]) for k in PARAMS}
    return params, m, v


def _minibatches(shard, size: int) -> list:
    return [shard[i:i + size] for i in range(0, len(shard), size)]


def train_on_shards(
    model: MLPModel,
    shards: list,
    cfg: TrainingMasterConfig,
    adam_config: AdamConfig = AdamConfig(),
    states: list[AdamState] | None = None,
) -> tuple[MLPModel, list[AdamState]]:
    """One pass over pre-cut worker shards with periodic parameter averaging.

    Every worker starts from ``model``.  After each round of up to
    ``averaging_frequency`` minibatches per worker, the replicas that took
    part are averaged (parameters and Adam moments); a final average closes
    the epoch.  A single worker never averages, so it is plain sequential
    Adam.
    """
    batches = [_minibatches(list(s), cfg.batch_size_per_worker) for s in shards]
    if states is None:
        states = [AdamState.zeros_like(model, adam_config) for _ in shards]
    replicas = [(model, st) for st in states]
    rounds = max((len(b) for b in batches), default=0)
    rounds = -(-rounds // cfg.averaging_frequency)

    for r in range(rounds):
        lo = r * cfg.averaging_frequency
        hi = lo + cfg.averaging_frequency

        def work(i):
            net, st = replicas[i]
            for batch in batches[i][lo:hi]:
                net, st = train_step_adam(net, st, batch)
            return net, st

        active = [i for i in range(len(shards)) if batches[i][lo:hi]]
        results = run_tasks([lambda i=i: work(i) for i in active])
        for i, res in zip(active, results):
            replicas[i] = res
        if len(shards) > 1:
            params, m, v = _average([replicas[i] for i in active])
            replicas = [
                (replicas[i][0].with_params(params), AdamState(m, v, replicas[i][1].t, adam_config))
                for i in range(len(shards))
            ]

    return replicas[0][0], [st for _, st in replicas]


def train_parameter_averaging(
    corpus,
    n_classes: int,
    cfg: TrainingMasterConfig = TrainingMasterConfig(),
    net: NetParams = NetParams(),
    seed: int = 42,
) -> MLPModel:
    """Train on a list (or PartitionedDataset) of ``(label ordinal, FeatureVector)``."""
    examples = corpus.collect() if hasattr(corpus, "collect") else list(corpus)
    if not examples:
        raise EmptyCorpus("MLP needs at least one training example")
    dim = examples[0][1].dim
    model = init_mlp(dim, net.units, n_classes, seed)
    states = None
    for epoch in range(net.epochs):
        order = np.random.default_rng([seed, epoch]).permutation(len(examples))
        shuffled = [examples[i] for i in order]
        shards = list(partition(shuffled, cfg.worker_count).partitions)
        model, states = train_on_shards(model, shards, cfg, net.adam, states)
    return model


def predict_mlp(model: MLPModel, x: FeatureVector) -> np.ndarray:
    return forward(model, x)
