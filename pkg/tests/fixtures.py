"""Deterministic corpora for curation and CLI tests."""
import numpy as np

from fedlime.corpus import Corpus, Document, SyntheticSpec, generate_synthetic
from fedlime.curate import MatchCandidate

NEUTRAL = ("lunch", "weather", "meeting", "coffee", "train", "garden", "movie", "shopping",
           "email", "weekend", "football", "recipe")
NEGATIVE = ("crying", "miserable", "alone", "hurting", "broken", "sorrow", "grief", "hopeless",
            "lost", "painful", "gloomy", "aching")
FILLER = tuple(f"f{i:03d}" for i in range(300))


def pseudo_fixture(seed=0, n_reference=300, n_unlabeled=100):
    """Reference corpus (0 = neutral, 1 = negative) and an unlabeled pool built
    50/50 from the two keyword pools. Returns (reference, unlabeled, pool_of_id)."""
    ref = generate_synthetic(SyntheticSpec(n_reference, {0: NEUTRAL, 1: NEGATIVE}, FILLER, balance=0.5, seed=seed))
    pool = generate_synthetic(SyntheticSpec(n_unlabeled, {0: NEUTRAL, 1: NEGATIVE}, FILLER, balance=0.5,
                                            seed=seed + 1000))
    unlabeled = Corpus(tuple(Document(d.id, d.text, None, "collected") for d in pool))
    return ref, unlabeled, {d.id: d.label for d in pool}


def match_fixture(n=100, seed=0):
    """Candidates whose sentences reuse a varying share of their source's words."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        src = [FILLER[j] for j in rng.choice(len(FILLER), 10, replace=False)]
        keep = int(rng.integers(0, 11))
        fresh = [f"new{i}x{k}" for k in range(int(rng.integers(1, 6)))]
        sent = [src[j] for j in rng.choice(10, keep, replace=False)] + fresh
        out.append(MatchCandidate(" ".join(sent), " ".join(src)))
    return out
