"""Corpus ingestion, text cleaning, label bookkeeping and synthetic corpora."""
from __future__ import annotations

import csv
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

LABELS = (0, 1)
LABEL_NAMES = {0: "SAD", 1: "DEPRESSION"}
KEEP_PUNCT = frozenset(".,!?'")
_URL_PREFIXES = ("http://", "https://", "www.")


class CorpusError(ValueError):
    """Raised for unreadable or structurally invalid corpus input."""


@dataclass(frozen=True)
class Document:
    id: int
    text: str
    label: int | None = None
    source: str = ""

    def __post_init__(self):
        if self.label is not None and (isinstance(self.label, bool) or self.label not in LABELS):
            raise ValueError(f"label must be 0, 1 or None, got {self.label!r}")

    def to_json(self) -> dict:
        return {"id": self.id, "text": self.text, "label": self.label, "source": self.source}


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...] = ()
    n_malformed: int = 0
    counts: dict = field(init=False, compare=False)

    def __post_init__(self):
        docs = tuple(self.documents)
        object.__setattr__(self, "documents", docs)
        ids = [d.id for d in docs]
        if len(set(ids)) != len(ids):
            raise CorpusError("document ids must be unique")
        tally = Counter(d.label for d in docs)
        object.__setattr__(self, "counts", {0: tally[0], 1: tally[1], None: tally[None]})

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(self.documents)

    @property
    def labeled(self) -> tuple[Document, ...]:
        return tuple(d for d in self.documents if d.label is not None)

    def by_id(self) -> dict[int, Document]:
        return {d.id: d for d in self.documents}

    def subset(self, ids: Iterable[int]) -> "Corpus":
        keep = set(ids)
        return Corpus(tuple(d for d in self.documents if d.id in keep))


@dataclass(frozen=True)
class LabelStats:
    n_total: int
    n_per_label: dict[int, int]
    ratio: dict[int, float] | None

    @property
    def empty(self) -> bool:
        return self.ratio is None

    def to_json(self) -> dict:
        return {
            "n_total": self.n_total,
            "n_per_label": {str(k): v for k, v in self.n_per_label.items()},
            "ratio": None if self.ratio is None else {str(k): v for k, v in self.ratio.items()},
        }


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a keyword-separable two-class corpus.

    ``balance`` is the fraction of label-0 documents. Each document gets a
    count in ``keywords_per_doc`` of distinct keywords of its own class, padded with noise
    tokens up to a length drawn from ``length_range``.
    """

    n_docs: int
    keywords: dict[int, tuple[str, ...]]
    noise: tuple[str, ...]
    length_range: tuple[int, int] = (6, 14)
    keywords_per_doc: tuple[int, int] = (1, 3)
    balance: float = 0.5
    seed: int = 0

    def validate(self) -> None:
        if self.n_docs < 0:
            raise ValueError("n_docs must be non-negative")
        if set(self.keywords) != set(LABELS):
            raise ValueError("keywords must be given for labels 0 and 1")
        k0, k1, noise = set(self.keywords[0]), set(self.keywords[1]), set(self.noise)
        if not k0 or not k1 or not noise:
            raise ValueError("keyword sets and noise vocabulary must be non-empty")
        if k0 & k1 or (k0 | k1) & noise:
            raise ValueError("class keyword sets and noise vocabulary must be pairwise disjoint")
        lo, hi = self.length_range
        klo, khi = self.keywords_per_doc
        if not (1 <= klo <= khi) or not (1 <= lo <= hi) or khi > lo:
            raise ValueError("need 1 <= keywords_per_doc <= length_range bounds")
        if any(khi > len(kw) for kw in self.keywords.values()):
            raise ValueError("keywords_per_doc exceeds a keyword set (keywords are drawn without replacement)")
        if not 0.0 <= self.balance <= 1.0:
            raise ValueError("balance must be in [0, 1]")


def default_synthetic_spec(n_docs: int = 1000, balance: float = 0.58, seed: int = 0) -> SyntheticSpec:
    """A sadness/depression flavoured keyword corpus used by tests and demos."""
    sad = ("tired", "unhappy", "cried", "gloomy", "upset", "miss", "lonely", "blue",
           "sorrow", "disappointed", "heartbroken", "down", "tearful", "moody", "glum",
           "regret", "homesick", "sulky", "mournful", "dismal")
    dep = ("hopeless", "worthless", "numb", "empty", "suicidal", "pointless", "despair",
           "exhausted", "insomnia", "selfharm", "meaningless", "trapped", "dread", "burden",
           "emptiness", "helpless", "isolated", "disappear", "darkness", "nothing")
    noise = tuple(f"w{i:04d}" for i in range(1000))
    return SyntheticSpec(n_docs=n_docs, keywords={0: sad, 1: dep}, noise=noise,
                         keywords_per_doc=(3, 5), balance=balance, seed=seed)


_URL_OR_MENTION = re.compile(r"^(?:https?://|www\.|@)", re.IGNORECASE)
_WWW = re.compile(r"^www\.", re.IGNORECASE)


def _keep_char(c: str) -> bool:
    return c.isalpha() or c.isdigit() or c.isspace() or c in KEEP_PUNCT


def clean_text(raw: str) -> str:
    """Strip links, @-mentions and special characters; collapse whitespace.

    Case is preserved. Token removal runs again after character filtering
    because stripping e.g. ``<`` from ``<www.x.com>`` exposes a new link token;
    this makes the function idempotent.
    """
    tokens = [t for t in raw.split() if not _URL_OR_MENTION.match(t)]
    filtered = "".join(c for c in " ".join(tokens) if _keep_char(c))
    return " ".join(t for t in filtered.split() if not _WWW.match(t))


def _parse_label(value) -> int | None:
    if value is None or value == "":
        return None
    if isinstance(value, bool):
        raise ValueError("boolean label")
    if isinstance(value, str):
        value = value.strip()
        if value == "":
            return None
        value = int(value)
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError("non-integer label")
        value = int(value)
    if value not in LABELS:
        raise ValueError(f"label {value!r} not in {{0, 1}}")
    return int(value)


def _iter_records(path: Path, fmt: str):
    if fmt == "jsonl":
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    yield lineno, None
                    continue
                yield lineno, rec if isinstance(rec, dict) else None
    elif fmt == "csv":
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is not None and "text" not in reader.fieldnames:
                raise CorpusError(f"{path}: CSV header must name a 'text' column")
            for rec in reader:
                yield reader.line_num, rec
    else:
        raise CorpusError(f"unknown corpus format {fmt!r} (expected csv or jsonl)")


def infer_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    return {".csv": "csv", ".jsonl": "jsonl", ".json": "jsonl"}.get(suffix, "jsonl")


def load_corpus(path: str | Path, fmt: str | None = None) -> Corpus:
    """Read a CSV or JSONL corpus. Ids follow file order of accepted records.

    Rows that cannot be parsed or carry an invalid label are skipped and
    counted in ``Corpus.n_malformed``; a parseable record without a ``text``
    field is an error.
    """
    path = Path(path)
    fmt = fmt or infer_format(path)
    if fmt not in ("csv", "jsonl"):
        raise CorpusError(f"unknown corpus format {fmt!r} (expected csv or jsonl)")
    if not path.is_file():
        raise CorpusError(f"cannot read corpus file {path}")
    docs: list[Document] = []
    malformed = 0
    try:
        for lineno, rec in _iter_records(path, fmt):
            if rec is None:
                malformed += 1
                continue
            if "text" not in rec or rec["text"] is None:
                raise CorpusError(f"{path}:{lineno}: record missing 'text'")
            text = rec["text"]
            if not isinstance(text, str) or not text.strip():
                malformed += 1
                continue
            try:
                label = _parse_label(rec.get("label"))
            except (TypeError, ValueError):
                malformed += 1
                continue
            docs.append(Document(len(docs), text, label, str(rec.get("source") or "")))
    except (OSError, UnicodeDecodeError) as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc
    if malformed:
        logger.warning("%s: skipped %d malformed record(s)", path, malformed)
    return Corpus(tuple(docs), n_malformed=malformed)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus:
            fh.write(json.dumps(doc.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def clean_corpus(corpus: Corpus) -> Corpus:
    """Clean every document; documents that end up empty are dropped."""
    out = []
    for d in corpus:
        text = clean_text(d.text)
        if text:
            out.append(Document(d.id, text, d.label, d.source))
    return Corpus(tuple(out), n_malformed=corpus.n_malformed)


def corpus_stats(corpus: Corpus) -> LabelStats:
    per = {label: 0 for label in LABELS}
    for d in corpus:
        if d.label is not None:
            per[d.label] += 1
    n_labeled = sum(per.values())
    ratio = {k: v / n_labeled for k, v in per.items()} if n_labeled else None
    return LabelStats(n_total=len(corpus), n_per_label=per, ratio=ratio)


def generate_synthetic(spec: SyntheticSpec) -> Corpus:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n0 = int(round(spec.n_docs * spec.balance))
    labels = np.array([0] * n0 + [1] * (spec.n_docs - n0), dtype=np.int64)
    rng.shuffle(labels)
    lo, hi = spec.length_range
    klo, khi = spec.keywords_per_doc
    docs = []
    for i, label in enumerate(labels.tolist()):
        keywords = spec.keywords[label]
        length = int(rng.integers(lo, hi + 1))
        n_kw = int(rng.integers(klo, khi + 1))
        words = [keywords[j] for j in rng.choice(len(keywords), n_kw, replace=False)]
        words += [spec.noise[j] for j in rng.integers(0, len(spec.noise), length - n_kw)]
        order = rng.permutation(length)
        docs.append(Document(i, " ".join(words[j] for j in order), label, "synthetic"))
    return Corpus(tuple(docs))


def split_train_test(corpus: Corpus, test_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Stratified split of the labeled documents.

    Unlabeled documents are placed in the training split so that
    ``train | test`` covers the input.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    test_ids: set[int] = set()
    for label in LABELS:
        ids = np.array(sorted(d.id for d in corpus if d.label == label), dtype=np.int64)
        n_test = int(round(len(ids) * test_fraction))
        if n_test < 1 or n_test > len(ids) - 1:
            raise CorpusError(
                f"label {label}: {len(ids)} document(s) cannot be split with test_fraction={test_fraction}"
            )
        test_ids.update(rng.permutation(ids)[:n_test].tolist())
    train = Corpus(tuple(d for d in corpus if d.id not in test_ids))
    test = Corpus(tuple(d for d in corpus if d.id in test_ids))
    return train, test


def corpus_from_texts(texts: Sequence[str], labels: Sequence[int | None] | None = None,
                      source: str = "") -> Corpus:
    labels = labels if labels is not None else [None] * len(texts)
    return Corpus(tuple(Document(i, t, l, source) for i, (t, l) in enumerate(zip(texts, labels))))
