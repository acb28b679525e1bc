"""Local surrogate explanations (LIME) for text, written against our own model."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .corpus import LABEL_NAMES, clean_text
from .features import CsrMatrix, VectorizerConfig, vectorize
from .model import ModelParams, predict_proba_many

BAR_WIDTH = 40


class ExplainError(ValueError):
    pass


class SingularSystemError(ExplainError, ArithmeticError):
    """Surrogate normal equations are singular; retry with ridge_lambda > 0."""


@dataclass(frozen=True)
class LimeConfig:
    num_samples: int = 500
    kernel_width: float = 0.75
    ridge_lambda: float = 1e-3
    top_k: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < 10:
            raise ValueError("num_samples must be >= 10")
        if not self.kernel_width > 0:
            raise ValueError("kernel_width must be positive")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be non-negative")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


@dataclass(frozen=True)
class Perturbation:
    mask: tuple[int, ...]
    text: str
    model_output: float
    proximity: float


@dataclass(frozen=True)
class Explanation:
    text: str
    tokens: tuple[str, ...]
    weights: tuple[float, ...]
    intercept: float
    fidelity_r2: float
    predicted_class: int
    predicted_proba: float
    perturbations: tuple[Perturbation, ...] = field(default=(), compare=False, repr=False)

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "predicted_class": self.predicted_class,
            "predicted_proba": self.predicted_proba,
            "intercept": self.intercept,
            "fidelity_r2": self.fidelity_r2,
            "weights": [{"token": t, "weight": w} for t, w in zip(self.tokens, self.weights)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Explanation":
        return cls(
            text=obj["text"],
            tokens=tuple(e["token"] for e in obj["weights"]),
            weights=tuple(float(e["weight"]) for e in obj["weights"]),
            intercept=float(obj["intercept"]),
            fidelity_r2=float(obj["fidelity_r2"]),
            predicted_class=int(obj["predicted_class"]),
            predicted_proba=float(obj["predicted_proba"]),
        )


def perturb(tokens: Sequence[str], num_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Binary masks, row 0 all ones; each other row drops 1..T distinct positions."""
    t = len(tokens)
    if t == 0:
        raise ExplainError("cannot perturb an empty token list")
    masks = np.ones((num_samples, t), dtype=np.int8)
    for i in range(1, num_samples):
        n_drop = int(rng.integers(1, t + 1))
        masks[i, rng.choice(t, size=n_drop, replace=False)] = 0
    return masks


def proximity(mask, kernel_width: float) -> float:
    """``exp(-d^2 / width^2)`` with ``d`` the cosine distance to the all-ones mask."""
    m = np.asarray(mask, dtype=np.float64)
    if m.size == 0:
        raise ExplainError("mask must have at least one position")
    kept = float(m.sum())
    cos = kept / (math.sqrt(kept) * math.sqrt(m.size)) if kept > 0 else 0.0
    d = 1.0 - cos
    return math.exp(-(d * d) / (kernel_width * kernel_width))


def _proximities(masks: np.ndarray, kernel_width: float) -> np.ndarray:
    return np.array([proximity(m, kernel_width) for m in masks])


def fit_surrogate(masks, outputs, proximities, ridge_lambda: float) -> tuple[np.ndarray, float, float]:
    """Weighted ridge fit ``y ~ b0 + beta . mask`` via the normal equations.

    The intercept is not penalised. Returns ``(beta, b0, weighted_r2)``.
    """
    m = np.ascontiguousarray(masks, dtype=np.float64)
    y = np.ascontiguousarray(outputs, dtype=np.float64)
    pi = np.ascontiguousarray(proximities, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != y.shape[0] or y.shape != pi.shape:
        raise ExplainError("masks, outputs and proximities must have matching lengths")
    if m.shape[0] < 2:
        raise ExplainError("need at least two perturbations")
    a, rhs = kernels.weighted_normal_equations(m, y, pi, float(ridge_lambda))
    sol, ok = kernels.cholesky_solve(a, rhs)
    if not ok:
        raise SingularSystemError("surrogate normal equations are singular")
    b0, beta = float(sol[0]), np.asarray(sol[1:])
    fitted = b0 + m @ beta
    ybar = float(np.dot(pi, y) / np.sum(pi))
    sse = float(np.dot(pi, (y - fitted) ** 2))
    tss = float(np.dot(pi, (y - ybar) ** 2))
    r2 = 1.0 - sse / tss if tss > 0 else 1.0
    return beta, b0, min(r2, 1.0)


def _merge_positions(words: Sequence[str], coef: np.ndarray) -> tuple[list[str], list[float]]:
    merged: dict[str, float] = {}
    for word, c in zip(words, coef):
        merged[word] = merged.get(word, 0.0) + float(c)
    return list(merged), list(merged.values())


def explain_instance(params: ModelParams, vec: VectorizerConfig, text: str, cfg: LimeConfig) -> Explanation:
    """Explain the class-1 probability of ``text`` with a locally weighted linear surrogate.

    Interpretable features are the whitespace-separated words of the cleaned
    text; masked variants drop words. Repeated words are merged by summing
    their coefficients before the ``top_k`` largest by magnitude are kept.
    """
    cleaned = clean_text(text)
    words = cleaned.split()
    if not words:
        raise ExplainError("text is empty after cleaning")
    rng = np.random.default_rng(cfg.seed)
    masks = perturb(words, cfg.num_samples, rng)
    texts = [" ".join(w for w, keep in zip(words, row) if keep) for row in masks]
    X = CsrMatrix.from_vectors([vectorize(vec, t) for t in texts], vec.hash_dim)
    outputs = predict_proba_many(params, X)
    prox = _proximities(masks, cfg.kernel_width)
    beta, b0, r2 = fit_surrogate(masks, outputs, prox, cfg.ridge_lambda)

    tokens, weights = _merge_positions(words, beta)
    order = sorted(range(len(tokens)), key=lambda i: -abs(weights[i]))[:cfg.top_k]
    proba = float(outputs[0])
    perts = tuple(Perturbation(tuple(int(v) for v in row), t, float(o), float(p))
                  for row, t, o, p in zip(masks, texts, outputs, prox))
    return Explanation(
        text=cleaned,
        tokens=tuple(tokens[i] for i in order),
        weights=tuple(weights[i] for i in order),
        intercept=b0,
        fidelity_r2=r2,
        predicted_class=int(proba >= 0.5),
        predicted_proba=proba,
        perturbations=perts,
    )


def _bar(weight: float, scale: float) -> int:
    return int(round(BAR_WIDTH * abs(weight) / scale)) if scale > 0 else 0


def render_explanation(e: Explanation, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(e.to_json(), sort_keys=True, ensure_ascii=False)
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [
        f"text: {e.text}",
        f"prediction: {LABEL_NAMES[e.predicted_class]} (p[DEPRESSION]={e.predicted_proba:.4f})",
        f"intercept: {e.intercept:+.4f}  fidelity_r2: {e.fidelity_r2:.4f}",
        f"{'':<16} {LABEL_NAMES[0]:>{BAR_WIDTH}}|{LABEL_NAMES[1]:<{BAR_WIDTH}}",
    ]
    scale = max((abs(w) for w in e.weights), default=0.0)
    width = max([16] + [len(t) for t in e.tokens])
    for tok, w in zip(e.tokens, e.weights):
        n = _bar(w, scale)
        left = "#" * n if w < 0 else ""
        right = "#" * n if w > 0 else ""
        lines.append(f"{tok:<{width}} {left:>{BAR_WIDTH}}|{right:<{BAR_WIDTH}} {w:+.6f}")
    return "\n".join(line.rstrip() for line in lines)
