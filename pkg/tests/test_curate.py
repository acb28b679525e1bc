import math

import pytest

from fedlime.corpus import Corpus, Document, corpus_from_texts
from fedlime.curate import CurateError, MatchCandidate, matched_corpus, pseudo_label, semantic_match_filter
from fedlime.features import VectorizerConfig
from fedlime.model import TrainConfig

from fixtures import match_fixture, pseudo_fixture

BINARY_UNIGRAM = VectorizerConfig(ngram_min=1, ngram_max=1, use_tf=False)


class TestSemanticMatch:
    def test_identical_kept_at_one(self):
        kept, rep = semantic_match_filter([MatchCandidate("I am so tired", "I am so tired")], VectorizerConfig(), 1.0)
        assert len(kept) == 1 and kept[0].similarity == pytest.approx(1.0)

    def test_disjoint_dropped(self):
        kept, rep = semantic_match_filter([MatchCandidate("alpha beta", "gamma delta")], VectorizerConfig(), 1e-9)
        assert kept == [] and rep.decisions[0]["similarity"] == 0.0

    @pytest.mark.parametrize("threshold, expect", [(0.70, 1), (1 / math.sqrt(2), 1), (0.71, 0)])
    def test_half_overlap(self, threshold, expect):
        cand = MatchCandidate("a b", "a b c d")
        kept, rep = semantic_match_filter([cand], BINARY_UNIGRAM, threshold)
        assert rep.decisions[0]["similarity"] == pytest.approx(2 / (math.sqrt(2) * math.sqrt(4)), abs=1e-12)
        assert len(kept) == expect

    def test_empty_input(self):
        kept, rep = semantic_match_filter([], VectorizerConfig(), 0.5)
        assert kept == [] and (rep.n_in, rep.n_kept, rep.n_dropped) == (0, 0, 0)

    def test_monotone_and_conserved(self):
        cands = match_fixture(100)
        prev = None
        for t in [i / 10 for i in range(1, 10)]:
            kept, rep = semantic_match_filter(cands, VectorizerConfig(), t)
            ids = {d["index"] for d in rep.decisions if d["kept"]}
            assert rep.n_kept + rep.n_dropped == rep.n_in == 100
            if prev is not None:
                assert ids <= prev
            prev = ids

    def test_invalid(self):
        with pytest.raises(CurateError):
            semantic_match_filter([], VectorizerConfig(), 1.01)
        with pytest.raises(CurateError):
            MatchCandidate("@x", "source")

    def test_matched_corpus(self):
        kept, _ = semantic_match_filter([MatchCandidate("hi there!", "hi there")], VectorizerConfig(), 0.1)
        c = matched_corpus(kept)
        assert [(d.text, d.label, d.source) for d in c] == [("hi there!", 1, "semantic_match")]


class TestPseudoLabel:
    def test_fixture_rates(self):
        ref, unl, pool = pseudo_fixture()
        kept, rep = pseudo_label(ref, unl, TrainConfig(seed=1), VectorizerConfig())
        neg = [i for i, l in pool.items() if l == 1]
        neu = [i for i, l in pool.items() if l == 0]
        kept_ids = {d.id for d in kept}
        assert len(kept_ids & set(neg)) >= 0.95 * len(neg)
        assert len(kept_ids & set(neu)) <= 0.05 * len(neu)
        assert all(d.label == 1 and d.source == "pseudo" for d in kept)
        assert rep.n_kept + rep.n_dropped == rep.n_in == 100

    def test_identical_to_positive_reference_kept(self):
        ref, _, _ = pseudo_fixture()
        target = next(d for d in ref if d.label == 1)
        kept, _ = pseudo_label(ref, corpus_from_texts([target.text]), TrainConfig(seed=0), VectorizerConfig())
        assert len(kept) == 1

    def test_threshold_bounds(self):
        ref, unl, _ = pseudo_fixture()
        with pytest.raises(CurateError):
            pseudo_label(ref, unl, TrainConfig(), VectorizerConfig(), 1.0 + 1e-9)
        kept, _ = pseudo_label(ref, unl, TrainConfig(epochs=2), VectorizerConfig(), 0.0)
        assert len(kept) == len(unl)

    def test_monotone_in_threshold(self):
        ref, unl, _ = pseudo_fixture(seed=5)
        sets = [{d.id for d in pseudo_label(ref, unl, TrainConfig(epochs=3, seed=2), VectorizerConfig(), t)[0]}
                for t in (0.2, 0.5, 0.8, 0.95)]
        assert all(b <= a for a, b in zip(sets, sets[1:]))

    def test_single_class_reference(self):
        ref = Corpus((Document(0, "a", 1), Document(1, "b", 1)))
        with pytest.raises(CurateError):
            pseudo_label(ref, corpus_from_texts(["c"]), TrainConfig(), VectorizerConfig())

    def test_empty_unlabeled(self):
        ref, _, _ = pseudo_fixture()
        with pytest.raises(CurateError):
            pseudo_label(ref, Corpus(), TrainConfig(), VectorizerConfig())
