"""Dataset curation: semantic-match filtering and pseudo-label filtering."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, Document, clean_text
from .features import VectorizerConfig, cosine_similarity, vectorize
from .model import Dataset, TrainConfig, fit_centralized, predict_proba

DEFAULT_MATCH_THRESHOLD = 0.5
DEFAULT_KEEP_THRESHOLD = 0.5


class CurateError(ValueError):
    pass


@dataclass(frozen=True)
class MatchCandidate:
    sentence: str
    source_text: str
    similarity: float | None = None

    def __post_init__(self):
        if not clean_text(self.sentence) or not clean_text(self.source_text):
            raise CurateError("candidate sentence and source must be non-empty after cleaning")


@dataclass(frozen=True)
class CurateReport:
    n_in: int
    n_kept: int
    n_dropped: int
    threshold: float
    decisions: tuple[dict, ...] = field(default=())

    def to_json(self) -> dict:
        return {"n_in": self.n_in, "n_kept": self.n_kept, "n_dropped": self.n_dropped,
                "threshold": self.threshold, "decisions": list(self.decisions)}


def _check_threshold(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise CurateError(f"{name} must be in [0, 1], got {value}")


def semantic_match_filter(candidates: Sequence[MatchCandidate], vec: VectorizerConfig,
                          threshold: float = DEFAULT_MATCH_THRESHOLD
                          ) -> tuple[list[MatchCandidate], CurateReport]:
    """Keep candidates whose cleaned sentence has cosine >= ``threshold`` to its source."""
    _check_threshold(threshold, "threshold")
    kept, decisions = [], []
    for i, cand in enumerate(candidates):
        sim = cosine_similarity(vectorize(vec, clean_text(cand.sentence)),
                                vectorize(vec, clean_text(cand.source_text)))
        keep = sim >= threshold
        decisions.append({"index": i, "similarity": sim, "kept": keep})
        if keep:
            kept.append(replace(cand, similarity=sim))
    report = CurateReport(len(candidates), len(kept), len(candidates) - len(kept), threshold,
                          tuple(decisions))
    return kept, report


def matched_corpus(kept: Sequence[MatchCandidate], label: int = 1) -> Corpus:
    """Kept sentences as corpus documents (paraphrases feed the depression class)."""
    return Corpus(tuple(Document(i, clean_text(c.sentence), label, "semantic_match")
                        for i, c in enumerate(kept)))


def pseudo_label(reference: Corpus, unlabeled: Corpus, train: TrainConfig, vec: VectorizerConfig,
                 keep_threshold: float = DEFAULT_KEEP_THRESHOLD) -> tuple[Corpus, CurateReport]:
    """Train on ``reference`` (0 = neutral-like, 1 = target-like) and keep the
    unlabeled documents scored at or above ``keep_threshold``.

    Kept documents get label 1 and source ``"pseudo"``.
    """
    _check_threshold(keep_threshold, "keep_threshold")
    ref = [d for d in reference if d.label is not None]
    if {d.label for d in ref} != {0, 1}:
        raise CurateError("reference corpus must contain both labels")
    if len(unlabeled) == 0:
        raise CurateError("unlabeled corpus is empty")
    data = Dataset.from_pairs([(vectorize(vec, clean_text(d.text)), d.label) for d in ref], vec.hash_dim)
    params = fit_centralized(data, vec.hash_dim, train)
    kept, decisions = [], []
    for d in unlabeled:
        text = clean_text(d.text)
        proba = predict_proba(params, vectorize(vec, text)) if text else 0.0
        keep = bool(text) and proba >= keep_threshold
        decisions.append({"id": d.id, "proba": proba, "kept": keep})
        if keep:
            kept.append(Document(d.id, text, 1, "pseudo"))
    n = len(unlabeled)
    report = CurateReport(n, len(kept), n - len(kept), keep_threshold, tuple(decisions))
    return Corpus(tuple(kept)), report


def load_candidates(path: str | Path) -> list[MatchCandidate]:
    """Read JSONL lines ``{"sentence": ..., "source": ...}``."""
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(MatchCandidate(rec["sentence"], rec["source"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CurateError(f"{path}:{lineno}: bad candidate record ({exc})") from exc
            except CurateError as exc:
                raise CurateError(f"{path}:{lineno}: {exc}") from exc
    return out
