"""Binary logistic regression over hashed sparse features, trained by SGD."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import kernels
from .features import CsrMatrix, SparseVector, VectorizerConfig
from .hashing import derive_seed, make_rng


class TrainingDivergence(ArithmeticError):
    """Loss or parameters became non-finite during training."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True, eq=False)
class ModelParams:
    weights: np.ndarray
    bias: float = 0.0

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-d array")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.weights))) and math.isfinite(self.bias)

    def __eq__(self, other):
        # bitwise equality: distinguishes -0.0/0.0 and treats identical NaNs as equal
        if not isinstance(other, ModelParams):
            return NotImplemented
        return (self.weights.tobytes() == other.weights.tobytes()
                and np.float64(self.bias).tobytes() == np.float64(other.bias).tobytes())

    __hash__ = None


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    batch_size: int = 10
    epochs: int = 20
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        # lr == 0 is allowed: it is the no-op baseline used in checks
        if not (self.learning_rate >= 0 and math.isfinite(self.learning_rate)):
            raise ValueError("learning_rate must be a finite non-negative number")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    loss: float
    n: int
    # confusion[true][pred]
    confusion: tuple[tuple[int, int], tuple[int, int]] = field(default=((0, 0), (0, 0)))

    def to_json(self) -> dict:
        return {"accuracy": self.accuracy, "loss": self.loss, "n": self.n,
                "confusion": [list(r) for r in self.confusion]}


@dataclass(frozen=True)
class Dataset:
    """Labeled rows in CSR form; what the training kernels consume."""

    X: CsrMatrix
    y: np.ndarray

    def __len__(self) -> int:
        return self.X.n_rows

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[SparseVector, int]], dim: int | None = None) -> "Dataset":
        vecs = [p[0] for p in pairs]
        labels = np.array([p[1] for p in pairs], dtype=np.float64)
        if labels.size and not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be 0 or 1")
        return cls(CsrMatrix.from_vectors(vecs, dim), labels)

    def take(self, rows: Sequence[int]) -> "Dataset":
        rows = list(rows)
        return Dataset(self.X.take(rows), self.y[np.asarray(rows, dtype=np.int64)])


DataLike = Union[Dataset, Sequence[tuple[SparseVector, int]]]


def as_dataset(data: DataLike, dim: int) -> Dataset:
    ds = data if isinstance(data, Dataset) else Dataset.from_pairs(data, dim)
    if ds.X.dim != dim:
        raise ValueError(f"dimension mismatch: data {ds.X.dim} vs model {dim}")
    return ds


def init_params(dim: int, seed: int) -> ModelParams:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    return ModelParams(rng.uniform(-0.01, 0.01, size=dim), 0.0)


def sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def _check_dim(params: ModelParams, x: SparseVector) -> None:
    if x.dim != params.dim:
        raise ValueError(f"dimension mismatch: input {x.dim} vs model {params.dim}")


def decision_function(params: ModelParams, x: SparseVector) -> float:
    _check_dim(params, x)
    return float(np.dot(params.weights[x.indices], x.values)) + params.bias


def predict_proba(params: ModelParams, x: SparseVector) -> float:
    return sigmoid(decision_function(params, x))


def predict_proba_many(params: ModelParams, X: CsrMatrix) -> np.ndarray:
    if X.dim != params.dim:
        raise ValueError(f"dimension mismatch: input {X.dim} vs model {params.dim}")
    z = kernels.csr_margins(X.indptr, X.indices, X.data, params.weights, params.bias)
    return kernels.numpy_backend.sigmoid(z)


def loss_and_grad(params: ModelParams, batch: DataLike, l2: float = 0.0) -> tuple[float, np.ndarray, float]:
    """Mean binary cross-entropy plus ``l2/2 * ||w||^2`` (bias unpenalised) and its gradient."""
    ds = as_dataset(batch, params.dim)
    if len(ds) == 0:
        raise ValueError("batch must be non-empty")
    rows = np.arange(len(ds), dtype=np.int64)
    loss, gw, gb = kernels.batch_loss_grad(ds.X.indptr, ds.X.indices, ds.X.data, ds.y, rows,
                                           params.weights, params.bias, float(l2))
    return float(loss), gw, float(gb)


def train(params: ModelParams, data: DataLike, config: TrainConfig,
          rng: np.random.Generator, epochs: int | None = None) -> ModelParams:
    """Mini-batch SGD; each epoch draws one permutation from ``rng``.

    ``epochs`` overrides ``config.epochs`` (the federated client passes E).
    """
    ds = as_dataset(data, params.dim)
    return train_with_loss(params, ds, config, rng, config.epochs if epochs is None else epochs)[0]


def train_with_loss(params: ModelParams, data: Dataset, config: TrainConfig,
                    rng: np.random.Generator, epochs: int) -> tuple[ModelParams, float]:
    """Like :func:`train` but also returns the mean mini-batch loss of the last epoch."""
    if len(data) == 0:
        raise ValueError("training data must be non-empty")
    w = params.weights.copy()
    b = params.bias
    X = data.X
    last = float("nan")
    for epoch in range(epochs):
        order = rng.permutation(len(data)).astype(np.int64)
        b, losses, bad = kernels.sgd_epoch(w, b, X.indptr, X.indices, X.data, data.y, order,
                                           float(config.learning_rate), int(config.batch_size),
                                           float(config.l2))
        if bad >= 0:
            raise TrainingDivergence(epoch, int(bad))
        if not np.all(np.isfinite(w)):
            raise TrainingDivergence(epoch, len(losses) - 1)
        last = float(np.mean(losses))
    return ModelParams(w, b), last


def epoch_rng(seed: int, epoch: int, client: int = 0) -> np.random.Generator:
    """Shuffle stream for one epoch (centralised) or one round (federated client)."""
    return make_rng(seed, epoch, client)


def init_seed(seed: int) -> int:
    return derive_seed(seed, "init")


def fit_centralized(data: DataLike, dim: int, config: TrainConfig,
                    params: ModelParams | None = None) -> ModelParams:
    """Centralised baseline: epoch ``e`` (1-based) shuffles with ``epoch_rng(seed, e, 0)``.

    This is the same stream a single federated client with E=1 sees in round
    ``e``, so a K=1, C=1 federated run reproduces this bitwise.
    """
    ds = as_dataset(data, dim)
    p = params if params is not None else init_params(dim, init_seed(config.seed))
    for e in range(1, config.epochs + 1):
        try:
            p = train(p, ds, config, epoch_rng(config.seed, e, 0), epochs=1)
        except TrainingDivergence as exc:
            raise TrainingDivergence(e - 1, exc.batch) from None
    return p


def _bce(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    return kernels.numpy_backend.softplus(z) - y * z


def evaluate(params: ModelParams, data: DataLike, threshold: float = 0.5) -> EvalMetrics:
    """Accuracy, mean cross-entropy and confusion counts; ``proba >= threshold`` predicts 1."""
    ds = as_dataset(data, params.dim)
    n = len(ds)
    if n == 0:
        raise ValueError("evaluation data must be non-empty")
    z = kernels.csr_margins(ds.X.indptr, ds.X.indices, ds.X.data, params.weights, params.bias)
    proba = kernels.numpy_backend.sigmoid(z)
    pred = (proba >= threshold).astype(np.int64)
    truth = ds.y.astype(np.int64)
    conf = [[0, 0], [0, 0]]
    for t in (0, 1):
        for p in (0, 1):
            conf[t][p] = int(np.sum((truth == t) & (pred == p)))
    acc = (conf[0][0] + conf[1][1]) / n
    loss = float(np.mean(_bce(z, ds.y)))
    return EvalMetrics(acc, loss, n, (tuple(conf[0]), tuple(conf[1])))


def save_model(params: ModelParams, vec: VectorizerConfig, path: str | Path) -> None:
    """Write ``{dim, weights, bias, vectorizer_config}``; floats use repr so they round-trip."""
    obj = {
        "dim": params.dim,
        "weights": params.weights.tolist(),
        "bias": params.bias,
        "vectorizer_config": asdict(vec),
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> tuple[ModelParams, VectorizerConfig]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    params = ModelParams(np.array(obj["weights"], dtype=np.float64), obj["bias"])
    if params.dim != obj["dim"]:
        raise ValueError("model file: dim does not match weights length")
    vec = VectorizerConfig(**obj["vectorizer_config"])
    if vec.hash_dim != params.dim:
        raise ValueError("model file: vectorizer hash_dim does not match dim")
    return params, vec


def with_epochs(config: TrainConfig, epochs: int) -> TrainConfig:
    return replace(config, epochs=epochs)
