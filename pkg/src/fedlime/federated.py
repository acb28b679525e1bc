"""FedAvg simulation: partitioning, client sampling, local updates, aggregation."""
from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Corpus
from .features import VectorizerConfig, vectorize
from .hashing import make_rng
from .model import (
    DataLike,
    Dataset,
    ModelParams,
    TrainConfig,
    as_dataset,
    epoch_rng,
    evaluate,
    init_params,
    init_seed,
    train_with_loss,
)

logger = logging.getLogger(__name__)

STRATEGIES = ("iid", "label_skew")


class FederatedConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FedConfig:
    K: int = 10
    C: float = 0.3
    E: int = 1
    rounds: int = 50
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise FederatedConfigError("K must be >= 1")
        if not 0.0 < self.C <= 1.0:
            raise FederatedConfigError("C must be in (0, 1]")
        if self.E < 1:
            raise FederatedConfigError("E must be >= 1")
        if self.rounds < 1:
            raise FederatedConfigError("rounds must be >= 1")

    @property
    def clients_per_round(self) -> int:
        return clients_per_round(self.K, self.C)


@dataclass(frozen=True)
class PartitionSpec:
    strategy: str = "iid"
    shards_per_client: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise FederatedConfigError(f"unknown partition strategy {self.strategy!r}")
        if self.shards_per_client < 1:
            raise FederatedConfigError("shards_per_client must be >= 1")


@dataclass(frozen=True)
class ClientShard:
    client_id: int
    doc_ids: tuple[int, ...]

    @property
    def n_k(self) -> int:
        return len(self.doc_ids)


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    selected_clients: tuple[int, ...]
    global_test_accuracy: float
    global_test_loss: float
    mean_client_train_loss: float

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "clients": list(self.selected_clients),
            "test_acc": self.global_test_accuracy,
            "test_loss": self.global_test_loss,
            "train_loss": self.mean_client_train_loss,
        }


def clients_per_round(K: int, C: float) -> int:
    return max(1, math.floor(C * K))


def partition(corpus: Corpus, K: int, spec: PartitionSpec) -> list[ClientShard]:
    """Split the labeled documents into ``K`` disjoint shards.

    ``iid`` shuffles then deals round-robin. ``label_skew`` sorts by
    (label, id), cuts ``K * shards_per_client`` contiguous pieces, shuffles the
    pieces and hands each client ``shards_per_client`` of them. Doc ids inside
    a shard are kept ascending.
    """
    labeled = sorted(((d.label, d.id) for d in corpus if d.label is not None), key=lambda t: t[1])
    if K < 1:
        raise FederatedConfigError("K must be >= 1")
    if len(labeled) < K:
        raise FederatedConfigError(f"{len(labeled)} labeled documents cannot fill {K} clients")
    rng = np.random.default_rng(spec.seed)
    if spec.strategy == "iid":
        ids = np.array([i for _, i in labeled], dtype=np.int64)
        perm = rng.permutation(ids)
        groups = [perm[k::K] for k in range(K)]
    else:
        ordered = np.array([i for _, i in sorted(labeled)], dtype=np.int64)
        pieces = np.array_split(ordered, K * spec.shards_per_client)
        order = rng.permutation(len(pieces))
        s = spec.shards_per_client
        groups = [np.concatenate([pieces[j] for j in order[k * s:(k + 1) * s]]) for k in range(K)]
    return [ClientShard(k, tuple(sorted(int(i) for i in g))) for k, g in enumerate(groups)]


def select_clients(K: int, C: float, round: int, seed: int) -> list[int]:
    if K < 1 or not 0.0 < C <= 1.0:
        raise FederatedConfigError("need K >= 1 and 0 < C <= 1")
    m = clients_per_round(K, C)
    rng = make_rng(seed, "select", round)
    return sorted(int(c) for c in rng.choice(K, size=m, replace=False))


def client_update(global_params: ModelParams, shard_data: DataLike, E: int, train: TrainConfig,
                  rng: np.random.Generator) -> tuple[ModelParams, int]:
    params, n_k, _ = _client_update(global_params, as_dataset(shard_data, global_params.dim), E, train, rng)
    return params, n_k


def _client_update(global_params, data: Dataset, E, train, rng):
    if len(data) == 0:
        raise FederatedConfigError("client shard is empty")
    params, loss = train_with_loss(global_params, data, train, rng, E)
    return params, len(data), loss


def _canonical_key(update: tuple[ModelParams, int]):
    p, n = update
    return (n, np.float64(p.bias).tobytes(), p.weights.tobytes())


def aggregate(updates: Sequence[tuple[ModelParams, int]]) -> ModelParams:
    """Sample-size weighted mean of parameters.

    Updates are summed in a canonical order (by size, then parameter bytes),
    so the result is exactly invariant to the order they arrive in.
    """
    if not updates:
        raise ValueError("aggregate needs at least one update")
    dim = updates[0][0].dim
    if any(p.dim != dim for p, _ in updates):
        raise ValueError("all updates must share the same dimension")
    if any(n <= 0 for _, n in updates):
        raise ValueError("sample counts must be positive")
    ordered = sorted(updates, key=_canonical_key)
    total = sum(n for _, n in ordered)
    frac = [n / total for _, n in ordered]
    w = frac[0] * ordered[0][0].weights
    b = frac[0] * ordered[0][0].bias
    for f, (p, _) in zip(frac[1:], ordered[1:]):
        w += f * p.weights
        b += f * p.bias
    return ModelParams(w, b)


def _docs_dataset(corpus: Corpus, vec: VectorizerConfig) -> tuple[Dataset, dict[int, int]]:
    docs = [d for d in corpus if d.label is not None]
    ds = Dataset.from_pairs([(vectorize(vec, d.text), d.label) for d in docs], vec.hash_dim)
    return ds, {d.id: row for row, d in enumerate(docs)}


def run_federated(corpus_train: Corpus, corpus_test: Corpus, fed: FedConfig, part: PartitionSpec,
                  vec: VectorizerConfig, workers: int = 1,
                  params: ModelParams | None = None) -> tuple[ModelParams, list[RoundMetrics]]:
    """Simulate ``fed.rounds`` rounds of FedAvg and evaluate on ``corpus_test`` each round.

    Client ``k`` in round ``r`` (1-based) shuffles with ``epoch_rng(fed.seed, r, k)``,
    so results do not depend on ``workers``.
    """
    shards = partition(corpus_train, fed.K, part)
    empty = [s.client_id for s in shards if s.n_k == 0]
    if empty:
        raise FederatedConfigError(f"client(s) {empty} received no data; lower K or shards_per_client")
    train_ds, row_of = _docs_dataset(corpus_train, vec)
    test_ds, _ = _docs_dataset(corpus_test, vec)
    if len(test_ds) == 0:
        raise FederatedConfigError("test corpus has no labeled documents")
    client_data = [train_ds.take([row_of[i] for i in s.doc_ids]) for s in shards]

    global_params = params if params is not None else init_params(vec.hash_dim, init_seed(fed.seed))
    history: list[RoundMetrics] = []
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for r in range(1, fed.rounds + 1):
            selected = select_clients(fed.K, fed.C, r, fed.seed)

            def work(k, gp=global_params, r=r):
                return _client_update(gp, client_data[k], fed.E, fed.train, epoch_rng(fed.seed, r, k))

            results = list(pool.map(work, selected)) if pool else [work(k) for k in selected]
            global_params = aggregate([(p, n) for p, n, _ in results])
            m = evaluate(global_params, test_ds)
            train_loss = float(np.mean([loss for _, _, loss in results]))
            history.append(RoundMetrics(r, tuple(selected), m.accuracy, m.loss, train_loss))
            logger.debug("round %d clients=%s acc=%.4f", r, selected, m.accuracy)
    finally:
        if pool:
            pool.shutdown()
    return global_params, history


def write_metrics(history: Sequence[RoundMetrics], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for m in history:
            fh.write(json.dumps(m.to_json()) + "\n")
