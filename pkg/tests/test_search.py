from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from ideaforge.errors import IdeaNotPublished, UnknownIdea
from ideaforge.model import Idea, IdeaState
from ideaforge.search import STOPWORDS, SearchIndex, cosine, tokenize

from oracles import dense_tfidf_similarities, naive_bm25_scores


def pub(idea_id: int, title: str, body: str, tags=()) -> Idea:
    return Idea(
        idea_id, 1, title, body, set(tags),
        state=IdeaState.PUBLISHED,
    )


def build(*ideas: Idea) -> SearchIndex:
    return SearchIndex.build(ideas)


# Fixed 5-document fixture shared by the duplicate-detection tests. Expected
# similarities were computed with the dense oracle and frozen here.
CORPUS = {
    1: ("Solar water pumping",
        "Solar panels drive small pumps for irrigation in remote farms.",
        ["solar", "water"]),
    2: ("Wind powered irrigation",
        "Wind turbines can power irrigation pumps where grid power is missing.",
        ["wind", "water"]),
    3: ("Community tool library",
        "Neighbors share expensive tools through a lending library system.",
        ["sharing"]),
    4: ("Solar cooking stoves",
        "Parabolic mirrors concentrate sunlight for cooking without fuel.",
        ["solar"]),
    5: ("Rainwater harvesting",
        "Collect rooftop rainwater into cisterns for garden irrigation.",
        ["water"]),
}
DRAFT = ("Solar powered water pumps",
         "Using solar panels to drive irrigation pumps on remote farms.",
         ["solar", "water"])
FROZEN_DRAFT_SIMILARITIES = {
    1: 0.8347781955260423,
    2: 0.2094076555725262,
    3: 0.0,
    4: 0.2533088331562546,
    5: 0.09750906315369906,
}


def corpus_index() -> SearchIndex:
    return build(*(pub(i, t, b, tags) for i, (t, b, tags) in CORPUS.items()))


class TestTokenize:
    def test_splits_lowercases_and_drops_short(self):
        assert tokenize("Solar-powered water PUMPS") == [
            "solar", "powered", "water", "pumps",
        ]

    def test_empty_input(self):
        assert tokenize("") == []

    def test_all_stopwords(self):
        assert tokenize("the a an") == []

    def test_unicode_and_underscores(self):
        assert tokenize("énergie_solaire 42") == ["énergie", "solaire", "42"]

    def test_single_char_tokens_dropped(self):
        assert tokenize("x y solar") == ["solar"]

    def test_stopword_list_has_thirty_words(self):
        assert len(STOPWORDS) == 30

    def test_deterministic(self):
        text = "Wind turbines turn wind into power"
        assert tokenize(text) == tokenize(text)


class TestIndexMutation:
    def test_published_becomes_searchable_by_body_token(self):
        index = build(pub(1, "Title words", "Unique zebra content here today", []))
        results = index.search("zebra")
        assert [r.idea_id for r in results] == [1]
        assert results[0].matched_terms == frozenset({"zebra"})

    def test_indexing_requires_published_state(self):
        draft = Idea(1, 1, "Some title", "Body text that is long enough.", set())
        with pytest.raises(IdeaNotPublished):
            SearchIndex().index_idea(draft)

    def test_remove_then_search_unique_token(self):
        index = build(pub(1, "Alpha", "Walrus migration patterns", []),
                      pub(2, "Beta", "Common gardening advice", []))
        index.remove_idea(1)
        assert index.search("walrus") == []
        assert index.doc_ids() == [2]

    def test_remove_unknown_raises(self):
        with pytest.raises(UnknownIdea):
            SearchIndex().remove_idea(404)

    def test_reindex_is_idempotent(self):
        idea = pub(1, "Gamma rays", "High energy photons from space", ["physics"])
        index = SearchIndex()
        index.index_idea(idea)
        before = index.search("photons")
        index.index_idea(idea)
        assert index.search("photons") == before
        assert len(index) == 1


class TestBM25:
    def test_absent_token_no_results(self):
        index = corpus_index()
        assert index.search("xylophone") == []

    def test_empty_query(self):
        assert corpus_index().search("") == []
        assert corpus_index().search("a x") == []  # stopword + 1-char

    def test_two_term_query_matches_naive_oracle(self):
        index = corpus_index()
        results = index.search("solar irrigation")
        expected = naive_bm25_scores(CORPUS, "solar irrigation")
        assert {r.idea_id for r in results} == set(expected)
        for result in results:
            assert result.score == pytest.approx(expected[result.idea_id], rel=1e-12)
        expected_order = sorted(expected.items(), key=lambda p: (-p[1], p[0]))
        assert [r.idea_id for r in results] == [i for i, _ in expected_order]

    def test_random_corpora_match_oracle(self):
        rng = random.Random(99)
        vocab = ["solar", "wind", "water", "pump", "farm", "city", "tool",
                 "share", "energy", "garden", "library", "code"]
        for trial in range(30):
            n_docs = rng.randint(1, 12)
            docs = {}
            for i in range(1, n_docs + 1):
                title = " ".join(rng.choices(vocab, k=rng.randint(1, 4)))
                body = " ".join(rng.choices(vocab, k=rng.randint(3, 30)))
                tags = rng.sample(vocab, k=rng.randint(0, 3))
                docs[i] = (title, body, tags)
            index = build(*(pub(i, t, b, tags) for i, (t, b, tags) in docs.items()))
            query = " ".join(rng.choices(vocab, k=rng.randint(1, 3)))
            expected = naive_bm25_scores(docs, query)
            results = index.search(query)
            assert {r.idea_id for r in results} == set(expected)
            for result in results:
                assert result.score == pytest.approx(
                    expected[result.idea_id], rel=1e-9
                )

    def test_recall_every_doc_with_all_query_tokens_appears(self):
        index = corpus_index()
        results = index.search("irrigation pumps")
        found = {r.idea_id for r in results}
        for idea_id, (title, body, tags) in CORPUS.items():
            doc_terms = set(tokenize(title)) | set(tokenize(body)) | set(
                tokenize(" ".join(tags))
            )
            if {"irrigation", "pumps"} <= doc_terms:
                assert idea_id in found

    def test_score_positive_implies_matched_terms(self):
        for result in corpus_index().search("solar power library"):
            assert result.score > 0
            assert result.matched_terms


class TestDuplicateDetection:
    def test_identical_text_similarity_one(self):
        title, body, tags = CORPUS[1]
        hits = corpus_index().find_duplicates(title, body, tags, threshold=0.85)
        assert hits[0][0] == 1
        assert hits[0][1] == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_vocabulary_no_hits(self):
        hits = corpus_index().find_duplicates(
            "Totally unrelated knitting", "Wool sweaters knitted by robots yarn",
            ["knitting"], threshold=0.05,
        )
        assert hits == []

    def test_empty_corpus_never_fires(self):
        assert SearchIndex().find_duplicates("Any title", "Any body text", [], 0.85) == []

    def test_five_doc_fixture_matches_dense_oracle(self):
        index = corpus_index()
        title, body, tags = DRAFT
        expected = dense_tfidf_similarities(CORPUS, DRAFT)
        assert expected == pytest.approx(FROZEN_DRAFT_SIMILARITIES, abs=1e-15)
        hits = dict(index.find_duplicates(title, body, tags, threshold=1e-9))
        for idea_id, sim in expected.items():
            if sim >= 1e-9:
                assert hits[idea_id] == pytest.approx(sim, abs=1e-9)
            else:
                assert idea_id not in hits

    def test_threshold_filters_and_sorts_descending(self):
        index = corpus_index()
        title, body, tags = DRAFT
        hits = index.find_duplicates(title, body, tags, threshold=0.2)
        assert [h[0] for h in hits] == [1, 4, 2]
        assert all(h[1] >= 0.2 for h in hits)
        sims = [h[1] for h in hits]
        assert sims == sorted(sims, reverse=True)

    def test_bad_threshold_rejected(self):
        with pytest.raises(ValueError):
            corpus_index().find_duplicates("T", "B", [], 0.0)
        with pytest.raises(ValueError):
            corpus_index().find_duplicates("T", "B", [], 1.5)

    def test_tfidf_vector_unknown_idea(self):
        with pytest.raises(UnknownIdea):
            corpus_index().tfidf_vector(404)


# Realistic sparse-vector weights: absent terms are omitted, present terms
# carry idf >= 1, so stored weights are either 0 or comfortably above the
# subnormal range.
_vec = st.dictionaries(
    st.text(alphabet="abcdefg", min_size=1, max_size=3),
    st.one_of(st.just(0.0), st.floats(min_value=0.5, max_value=10.0)),
    max_size=6,
)


class TestCosine:
    @given(_vec)
    def test_self_similarity_is_one_for_nonzero(self, v):
        if any(x > 0 for x in v.values()):
            assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)
        else:
            assert cosine(v, v) == 0.0

    @given(_vec, _vec)
    def test_symmetric_and_bounded(self, a, b):
        left, right = cosine(a, b), cosine(b, a)
        assert left == pytest.approx(right, abs=1e-12)
        assert -1e-12 <= left <= 1.0 + 1e-12

    def test_orthogonal_is_zero(self):
        assert cosine({"a": 1.0}, {"b": 1.0}) == 0.0

    def test_empty_is_zero(self):
        assert cosine({}, {"a": 1.0}) == 0.0
