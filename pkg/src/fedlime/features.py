"""Tokenisation, hashed bag-of-n-gram vectors and cosine similarity."""
from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .hashing import hash_str

_TOKEN = re.compile(r"(?:[^\W_]|')+")


@dataclass(frozen=True)
class VectorizerConfig:
    ngram_min: int = 1
    ngram_max: int = 2
    hash_dim: int = 1 << 18
    use_tf: bool = True
    lowercase: bool = True

    def __post_init__(self):
        if self.ngram_min < 1 or self.ngram_max < self.ngram_min:
            raise ValueError("need 1 <= ngram_min <= ngram_max")
        d = self.hash_dim
        if isinstance(d, bool) or not isinstance(d, int) or d < 2 or d & (d - 1):
            raise ValueError(f"hash_dim must be a power of two >= 2, got {d!r}")

    def to_json(self) -> dict:
        return asdict(self)


class SparseVector:
    """Immutable sparse vector with strictly ascending indices."""

    __slots__ = ("dim", "indices", "values")

    def __init__(self, dim: int, indices=(), values=()):
        idx = np.asarray(indices, dtype=np.int64)
        val = np.asarray(values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be 1-d and the same length")
        if idx.size:
            if idx[0] < 0 or idx[-1] >= dim or np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly ascending within [0, dim)")
            if not np.all(np.isfinite(val)) or np.any(val == 0):
                raise ValueError("values must be finite and nonzero")
        idx.flags.writeable = False
        val.flags.writeable = False
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    def __setattr__(self, name, value):
        raise AttributeError("SparseVector is immutable")

    @classmethod
    def from_entries(cls, dim: int, entries: Iterable[tuple[int, float]]) -> "SparseVector":
        acc: dict[int, float] = {}
        for i, v in entries:
            acc[int(i)] = acc.get(int(i), 0.0) + float(v)
        items = sorted((i, v) for i, v in acc.items() if v != 0.0)
        return cls(dim, [i for i, _ in items], [v for _, v in items])

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[self.indices] = self.values
        return out

    def to_json(self) -> dict:
        return {"dim": self.dim, "indices": self.indices.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "SparseVector":
        return cls(obj["dim"], obj["indices"], obj["values"])

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (self.dim == other.dim and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.dim, self.indices.tobytes(), self.values.tobytes()))

    def __repr__(self):
        return f"SparseVector(dim={self.dim}, entries={self.entries!r})"


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    """Split on runs of characters other than letters, digits and apostrophes."""
    tokens = _TOKEN.findall(text)
    return [t.lower() for t in tokens] if lowercase else tokens


def ngrams(tokens: Sequence[str], n_min: int, n_max: int) -> list[str]:
    out = []
    for n in range(n_min, n_max + 1):
        out.extend(" ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return out


def feature_index(ngram: str, dim: int) -> int:
    return hash_str(ngram) % dim


def vectorize(config: VectorizerConfig, text: str) -> SparseVector:
    toks = tokenize(text, config.lowercase)
    acc: dict[int, float] = {}
    for gram in ngrams(toks, config.ngram_min, config.ngram_max):
        j = feature_index(gram, config.hash_dim)
        acc[j] = acc.get(j, 0.0) + 1.0
    if not config.use_tf:
        acc = dict.fromkeys(acc, 1.0)
    keys = sorted(acc)
    return SparseVector(config.hash_dim, keys, [acc[k] for k in keys])


def cosine_similarity(a: SparseVector, b: SparseVector) -> float:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    aa = float(np.dot(a.values, a.values))
    bb = float(np.dot(b.values, b.values))
    if aa == 0.0 or bb == 0.0:
        return 0.0
    _, ia, ib = np.intersect1d(a.indices, b.indices, assume_unique=True, return_indices=True)
    dot = float(np.dot(a.values[ia], b.values[ib]))
    # sqrt of the product (not product of sqrts) makes cos(v, v) exactly 1
    return max(-1.0, min(1.0, dot / math.sqrt(aa * bb)))


@dataclass(frozen=True)
class CsrMatrix:
    """Row-stacked sparse vectors in CSR layout, the input to the kernels."""

    dim: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.indptr.shape[0] - 1

    @classmethod
    def from_vectors(cls, vectors: Sequence[SparseVector], dim: int | None = None) -> "CsrMatrix":
        if dim is None:
            if not vectors:
                raise ValueError("dim is required for an empty matrix")
            dim = vectors[0].dim
        for v in vectors:
            if v.dim != dim:
                raise ValueError(f"dimension mismatch: {v.dim} vs {dim}")
        lens = np.array([v.nnz for v in vectors], dtype=np.int64)
        indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
        np.cumsum(lens, out=indptr[1:])
        if vectors:
            indices = np.concatenate([v.indices for v in vectors]).astype(np.int64)
            data = np.concatenate([v.values for v in vectors]).astype(np.float64)
        else:
            indices = np.empty(0, np.int64)
            data = np.empty(0, np.float64)
        return cls(dim, indptr, indices, data)

    def take(self, rows: Sequence[int]) -> "CsrMatrix":
        return CsrMatrix.from_vectors([self.row(int(r)) for r in rows], self.dim)

    def row(self, i: int) -> SparseVector:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return SparseVector(self.dim, self.indices[lo:hi], self.data[lo:hi])


def vectorize_many(config: VectorizerConfig, texts: Iterable[str]) -> CsrMatrix:
    return CsrMatrix.from_vectors([vectorize(config, t) for t in texts], config.hash_dim)
