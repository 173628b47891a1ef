"""In-process data-parallel execution over contiguous partitions.

Every distributed training/prediction routine in the package is written
against this module.  Partitions run on a thread pool; results are always
collected in partition order, so callers see a synchronous, deterministic
API whatever the pool size.
"""

from __future__ import annotations

import contextlib
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Generic, Hashable, Iterable, Sequence, TypeVar

from .errors import InvalidPartitionCount

T = TypeVar("T")
U = TypeVar("U")
K = TypeVar("K", bound=Hashable)

_state = threading.local()
_DEFAULT_POOL_SIZE = 1


def pool_size() -> int:
    return getattr(_state, "pool_size", _DEFAULT_POOL_SIZE)


def set_pool_size(n: int) -> None:
    """Set the default worker-pool size for the calling thread and new threads."""
    global _DEFAULT_POOL_SIZE
    if n < 1:
        raise ValueError("pool size must be >= 1")
    _DEFAULT_POOL_SIZE = n
    _state.pool_size = n


@contextlib.contextmanager
def pool(n: int):
    prev = pool_size()
    _state.pool_size = n
    try:
        yield
    finally:
        _state.pool_size = prev


@dataclass(frozen=True)
class PartitionedDataset(Generic[T]):
    partitions: tuple[tuple[T, ...], ...]

    def __post_init__(self):
        if len(self.partitions) < 1:
            raise InvalidPartitionCount("a dataset needs at least one partition")

    @property
    def num_partitions(self) -> int:
        return len(self.partitions)

    @property
    def total_len(self) -> int:
        return sum(len(p) for p in self.partitions)

    @property
    def sizes(self) -> list[int]:
        return [len(p) for p in self.partitions]

    def collect(self) -> list[T]:
        return [x for part in self.partitions for x in part]

    def __len__(self) -> int:
        return self.total_len


def partition(data: Sequence[T], p: int) -> PartitionedDataset[T]:
    """Contiguous blocks; the first len % p blocks get one extra element."""
    if p < 1:
        raise InvalidPartitionCount(f"partition count must be >= 1, got {p}")
    data = list(data)
    base, extra = divmod(len(data), p)
    parts = []
    start = 0
    for i in range(p):
        size = base + (1 if i < extra else 0)
        parts.append(tuple(data[start:start + size]))
        start += size
    return PartitionedDataset(tuple(parts))


def _run(fn: Callable[[int, tuple], U], parts: Sequence[tuple]) -> list[U]:
    n = pool_size()
    if n == 1 or len(parts) <= 1:
        return [fn(i, part) for i, part in enumerate(parts)]
    with ThreadPoolExecutor(max_workers=min(n, len(parts))) as ex:
        futures = [ex.submit(fn, i, part) for i, part in enumerate(parts)]
        # .result() in submission order re-raises the first failure by partition order
        return [f.result() for f in futures]


def run_tasks(tasks: Sequence[Callable[[], U]]) -> list[U]:
    """Run independent thunks on the pool, results in task order."""
    return _run(lambda _i, part: part[0](), [(t,) for t in tasks])


def par_map(pd: PartitionedDataset[T], f: Callable[[T], U]) -> PartitionedDataset[U]:
    out = _run(lambda _i, part: tuple(f(x) for x in part), pd.partitions)
    return PartitionedDataset(tuple(out))


def map_partitions(
    pd: PartitionedDataset[T], f: Callable[[tuple[T, ...]], U]
) -> list[U]:
    """Apply f to each whole partition; one result per partition, in order."""
    return _run(lambda _i, part: f(part), pd.partitions)


def par_reduce(pd: PartitionedDataset[T], op: Callable[[T, T], T], identity: T) -> T:
    """Fold each partition, then combine the partials in partition-index order."""
    partials = _run(lambda _i, part: reduce(op, part, identity), pd.partitions)
    return reduce(op, partials, identity)


def group_min_by_key(pd: PartitionedDataset[tuple[K, float]]) -> dict[K, float]:
    def local(part):
        best: dict = {}
        for key, value in part:
            if key not in best or value < best[key]:
                best[key] = value
        return best

    merged: dict = {}
    for partial in _run(lambda _i, part: local(part), pd.partitions):
        for key, value in partial.items():
            if key not in merged or value < merged[key]:
                merged[key] = value
    return {k: merged[k] for k in sorted(merged)}


def repartition(pd: PartitionedDataset[T], p: int) -> PartitionedDataset[T]:
    return partition(pd.collect(), p)


def from_partitions(parts: Iterable[Iterable[T]]) -> PartitionedDataset[T]:
    return PartitionedDataset(tuple(tuple(p) for p in parts))


def aggregate(
    pd: PartitionedDataset[T],
    zero: Callable[[], U],
    seq_op: Callable[[U, T], U],
    comb_op: Callable[[U, U], U],
) -> U:
    """Spark-style aggregate: fold each partition from a fresh zero, then
    combine partials in partition-index order."""
    def local(_i, part):
        acc = zero()
        for x in part:
            acc = seq_op(acc, x)
        return acc

    partials = _run(local, pd.partitions)
    return reduce(comb_op, partials, zero())
