"""Deterministic content-based suggestions: similar ideas and collaborators.

No learned model: idea similarity reuses the search index's TF-IDF vectors,
collaborator affinity blends Jaccard overlap of interest tags with Jaccard
overlap of interaction sets (ideas authored, rated, or commented on). The
scoring functions sit behind this one module so a learned ranker could
replace them without touching callers.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Collection, Mapping, Optional

from .search import SearchIndex, cosine

# Blend weights; must sum to 1. Overridable through PlatformConfig.
TAG_WEIGHT = 0.5
INTERACTION_WEIGHT = 0.5


class SuggestionBasis(str, Enum):
    CONTENT_SIMILARITY = "ContentSimilarity"
    TAG_OVERLAP = "TagOverlap"
    CO_INTERACTION = "CoInteraction"


@dataclass(frozen=True)
class Suggestion:
    subject_id: int
    score: float
    basis: SuggestionBasis

    def to_payload(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "score": round(self.score, 6),
            "basis": self.basis.value,
        }


def jaccard(a: Collection, b: Collection) -> float:
    """Set overlap in [0,1]; two empty sets score 0, not 1, so users with no
    data are never recommended to everyone."""
    a, b = set(a), set(b)
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def similar_ideas(
    index: SearchIndex,
    idea_id: int,
    k: int,
    candidate_ids: Optional[Collection[int]] = None,
) -> list[Suggestion]:
    """Top-k indexed ideas by TF-IDF cosine against ``idea_id``, self
    excluded, ties broken by ascending id. ``candidate_ids`` restricts the
    pool (the platform passes the viewer-visible corpus)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    base = index.tfidf_vector(idea_id)
    pool = index.doc_ids() if candidate_ids is None else sorted(set(candidate_ids))
    scored = [
        Suggestion(other, cosine(base, index.tfidf_vector(other)),
                   SuggestionBasis.CONTENT_SIMILARITY)
        for other in pool
        if other != idea_id and other in index
    ]
    scored.sort(key=lambda s: (-s.score, s.subject_id))
    return scored[:k]


def suggest_collaborators(
    user_id: int,
    interest_tags: Mapping[int, Collection[str]],
    interactions: Mapping[int, Collection[int]],
    candidate_ids: Collection[int],
    k: int,
    tag_weight: float = TAG_WEIGHT,
    interaction_weight: float = INTERACTION_WEIGHT,
) -> list[Suggestion]:
    """Blend of tag and interaction-set Jaccard overlap, symmetric by
    construction. Zero-score candidates are omitted; ties break on lower
    user id. ``candidate_ids`` must already exclude Guests."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    own_tags = set(interest_tags.get(user_id, ()))
    own_interactions = set(interactions.get(user_id, ()))
    suggestions = []
    for candidate in sorted(set(candidate_ids)):
        if candidate == user_id:
            continue
        tag_score = jaccard(own_tags, interest_tags.get(candidate, ()))
        interaction_score = jaccard(own_interactions, interactions.get(candidate, ()))
        score = tag_weight * tag_score + interaction_weight * interaction_score
        if score == 0.0:
            continue
        basis = (
            SuggestionBasis.TAG_OVERLAP
            if tag_score >= interaction_score
            else SuggestionBasis.CO_INTERACTION
        )
        suggestions.append(Suggestion(candidate, score, basis))
    suggestions.sort(key=lambda s: (-s.score, s.subject_id))
    return suggestions[:k]
