"""Inverted index over published ideas: BM25 keyword search plus TF-IDF
cosine similarity for near-duplicate detection and idea recommendations.

Scoring composition (mirrored by the naive oracles in the test suite):

* document length = total token count over title+body+tags, unweighted
* per-term weight in a doc = sum over fields of boost(field) * tf(field)
* idf = ln((N - df + 0.5) / (df + 0.5) + 1), always positive
* BM25 sums over the *set* of query tokens (duplicates in a query are
  counted once)

TF-IDF vectors use the concatenated title+body+tags token stream with
smoothed idf = ln((1 + N) / (1 + df)) + 1, so unseen terms stay finite and
identical texts get cosine exactly 1. No stemming; the 30-word stopword
list is fixed (see docs/stopwords.txt).
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .errors import IdeaNotPublished, UnknownIdea
from .model import Idea, IdeaState

# Fixed English stopword list, exactly 30 entries.
STOPWORDS = frozenset(
    """the a an and or but if then of to in on at by for with is are was were
    be been it its this that as from not have""".split()
)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

BM25_K1 = 1.2
BM25_B = 0.75


class Field(str, Enum):
    TITLE = "title"
    BODY = "body"
    TAG = "tag"


DEFAULT_FIELD_BOOSTS: dict[Field, float] = {
    Field.TITLE: 2.0,
    Field.TAG: 1.5,
    Field.BODY: 1.0,
}


def tokenize(text: str) -> list[str]:
    """Unicode split on non-letter/digit runs, lowercased; drops tokens
    shorter than 2 chars and stopwords. Deterministic, order-preserving."""
    tokens = []
    for match in _TOKEN_RE.finditer(text.lower()):
        token = match.group()
        if len(token) >= 2 and token not in STOPWORDS:
            tokens.append(token)
    return tokens


def cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if not a or not b:
        return 0.0
    if len(a) > len(b):
        a, b = b, a
    dot = sum(weight * b.get(term, 0.0) for term, weight in a.items())
    if dot == 0.0:
        return 0.0
    norm_a = math.sqrt(sum(w * w for w in a.values()))
    norm_b = math.sqrt(sum(w * w for w in b.values()))
    return dot / (norm_a * norm_b)


@dataclass(frozen=True)
class QueryResult:
    idea_id: int
    score: float
    matched_terms: frozenset[str]


@dataclass
class _DocEntry:
    field_tfs: dict[Field, Counter]
    combined_tf: Counter
    length: int  # unweighted token count across all fields


def _doc_fields(title: str, body: str, tags: Iterable[str]) -> dict[Field, list[str]]:
    return {
        Field.TITLE: tokenize(title),
        Field.BODY: tokenize(body),
        Field.TAG: tokenize(" ".join(sorted(tags))),
    }


class SearchIndex:
    """In-memory inverted index; contents must mirror the Published corpus.

    Mutations are serialized by the owning platform; rebuild from the same
    corpus is deterministic.
    """

    def __init__(
        self,
        k1: float = BM25_K1,
        b: float = BM25_B,
        field_boosts: Optional[dict[Field, float]] = None,
    ) -> None:
        self.k1 = k1
        self.b = b
        self.field_boosts = dict(field_boosts or DEFAULT_FIELD_BOOSTS)
        self._docs: dict[int, _DocEntry] = {}
        # term -> idea_id -> field -> tf
        self._postings: dict[str, dict[int, dict[Field, int]]] = {}

    # -- corpus mutation ---------------------------------------------------

    def index_idea(self, idea: Idea) -> None:
        if idea.state is not IdeaState.PUBLISHED:
            raise IdeaNotPublished(f"idea {idea.idea_id} is {idea.state.value}")
        if idea.idea_id in self._docs:
            self.remove_idea(idea.idea_id)
        fields = _doc_fields(idea.title, idea.body, idea.tags)
        field_tfs = {f: Counter(toks) for f, toks in fields.items()}
        combined = Counter()
        length = 0
        for tokens in fields.values():
            combined.update(tokens)
            length += len(tokens)
        self._docs[idea.idea_id] = _DocEntry(field_tfs, combined, length)
        for fld, tfs in field_tfs.items():
            for term, tf in tfs.items():
                self._postings.setdefault(term, {}).setdefault(idea.idea_id, {})[
                    fld
                ] = tf

    def remove_idea(self, idea_id: int) -> None:
        if idea_id not in self._docs:
            raise UnknownIdea(f"idea {idea_id} is not indexed")
        del self._docs[idea_id]
        for term in list(self._postings):
            self._postings[term].pop(idea_id, None)
            if not self._postings[term]:
                del self._postings[term]

    @classmethod
    def build(cls, ideas: Iterable[Idea], **kwargs) -> "SearchIndex":
        index = cls(**kwargs)
        for idea in sorted(ideas, key=lambda i: i.idea_id):
            if idea.state is IdeaState.PUBLISHED:
                index.index_idea(idea)
        return index

    # -- introspection -------------------------------------------------------

    def doc_ids(self) -> list[int]:
        return sorted(self._docs)

    def __contains__(self, idea_id: int) -> bool:
        return idea_id in self._docs

    def __len__(self) -> int:
        return len(self._docs)

    def document_frequency(self, term: str) -> int:
        return len(self._postings.get(term, ()))

    # -- BM25 search ---------------------------------------------------------

    def _idf(self, term: str) -> float:
        df = self.document_frequency(term)
        n = len(self._docs)
        return math.log((n - df + 0.5) / (df + 0.5) + 1.0)

    def search(self, query: str) -> list[QueryResult]:
        """Full ranked result list (no limit, no visibility filtering); the
        platform applies viewer filtering and truncation on top."""
        if not self._docs:
            return []
        query_terms = sorted(set(tokenize(query)))
        if not query_terms:
            return []
        avgdl = sum(d.length for d in self._docs.values()) / len(self._docs)
        scores: dict[int, float] = {}
        matched: dict[int, set[str]] = {}
        for term in query_terms:
            postings = self._postings.get(term)
            if not postings:
                continue
            idf = self._idf(term)
            for idea_id, field_tfs in postings.items():
                weighted_tf = sum(
                    self.field_boosts[fld] * tf for fld, tf in field_tfs.items()
                )
                dl = self._docs[idea_id].length
                denom = weighted_tf + self.k1 * (1 - self.b + self.b * dl / avgdl)
                scores[idea_id] = scores.get(idea_id, 0.0) + idf * (
                    weighted_tf * (self.k1 + 1) / denom
                )
                matched.setdefault(idea_id, set()).add(term)
        results = [
            QueryResult(idea_id, score, frozenset(matched[idea_id]))
            for idea_id, score in scores.items()
        ]
        results.sort(key=lambda r: (-r.score, r.idea_id))
        return results

    # -- TF-IDF similarity -----------------------------------------------------

    def _smoothed_idf(self, term: str) -> float:
        n = len(self._docs)
        return math.log((1 + n) / (1 + self.document_frequency(term))) + 1.0

    def tfidf_vector(self, idea_id: int) -> dict[str, float]:
        if idea_id not in self._docs:
            raise UnknownIdea(f"idea {idea_id} is not indexed")
        return {
            term: tf * self._smoothed_idf(term)
            for term, tf in self._docs[idea_id].combined_tf.items()
        }

    def tfidf_vector_for_draft(
        self, title: str, body: str, tags: Iterable[str]
    ) -> dict[str, float]:
        combined = Counter()
        for tokens in _doc_fields(title, body, tags).values():
            combined.update(tokens)
        return {term: tf * self._smoothed_idf(term) for term, tf in combined.items()}

    def find_duplicates(
        self, title: str, body: str, tags: Iterable[str], threshold: float
    ) -> list[tuple[int, float]]:
        """Published ideas whose TF-IDF cosine with the draft is >= threshold,
        most similar first."""
        if not 0 < threshold <= 1:
            raise ValueError(f"threshold must be in (0, 1], got {threshold}")
        draft_vec = self.tfidf_vector_for_draft(title, body, tags)
        hits = []
        for idea_id in self.doc_ids():
            similarity = cosine(draft_vec, self.tfidf_vector(idea_id))
            if similarity >= threshold:
                hits.append((idea_id, similarity))
        hits.sort(key=lambda pair: (-pair[1], pair[0]))
        return hits
