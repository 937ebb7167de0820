"""The idea state machine and the pre-moderation validation gate.

Automatic validation gates entry to a human moderation queue; publish or
reject is always a moderator decision. Invalid submissions are bounced back
to the caller and never stored.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Iterable, Optional

from .errors import InvalidState
from .model import (
    BODY_MAX_LEN,
    BODY_MIN_LEN,
    MAX_TAGS,
    TITLE_MAX_LEN,
    TITLE_MIN_LEN,
    IdeaState,
    format_ts,
    parse_ts,
)
from .search import SearchIndex

# Near-duplicate gate: TF-IDF cosine at or above this blocks submission.
DUPLICATE_THRESHOLD = 0.85

IDEA_TRANSITIONS: dict[IdeaState, frozenset[IdeaState]] = {
    IdeaState.DRAFT: frozenset({IdeaState.SUBMITTED}),
    IdeaState.SUBMITTED: frozenset({IdeaState.PUBLISHED, IdeaState.REJECTED}),
    IdeaState.REJECTED: frozenset({IdeaState.SUBMITTED}),
    IdeaState.PUBLISHED: frozenset(),
}


def check_idea_transition(current: IdeaState, new: IdeaState) -> None:
    if new not in IDEA_TRANSITIONS[current]:
        raise InvalidState(f"idea state {current.value} -> {new.value} is not allowed")


class FailureCode(str, Enum):
    TITLE_LENGTH = "TitleLength"
    BODY_LENGTH = "BodyLength"
    TAG_COUNT = "TagCount"
    NEAR_DUPLICATE = "NearDuplicate"


@dataclass(frozen=True)
class ValidationFailure:
    code: FailureCode
    detail: str
    duplicate_of: Optional[int] = None

    def to_payload(self) -> dict:
        return {
            "code": self.code.value,
            "detail": self.detail,
            "duplicate_of": self.duplicate_of,
        }


@dataclass(frozen=True)
class ValidationReport:
    failures: tuple[ValidationFailure, ...]

    @property
    def valid(self) -> bool:
        return not self.failures

    def to_payload(self) -> dict:
        return {
            "valid": self.valid,
            "failures": [f.to_payload() for f in self.failures],
        }


def validate_idea(
    title: str,
    body: str,
    tags: Iterable[str],
    corpus: SearchIndex,
    duplicate_threshold: float = DUPLICATE_THRESHOLD,
    duplicate_visible: Optional[set[int]] = None,
) -> ValidationReport:
    """Pure validation gate; all violated rules are reported, not just the
    first. ``duplicate_visible`` limits which duplicate ids may be named in
    the report (the check itself always runs over the whole corpus)."""
    tags = list(tags)
    failures: list[ValidationFailure] = []
    if not TITLE_MIN_LEN <= len(title) <= TITLE_MAX_LEN:
        failures.append(
            ValidationFailure(
                FailureCode.TITLE_LENGTH,
                f"title must be {TITLE_MIN_LEN}-{TITLE_MAX_LEN} chars, got {len(title)}",
            )
        )
    if not BODY_MIN_LEN <= len(body) <= BODY_MAX_LEN:
        failures.append(
            ValidationFailure(
                FailureCode.BODY_LENGTH,
                f"body must be {BODY_MIN_LEN}-{BODY_MAX_LEN} chars, got {len(body)}",
            )
        )
    if len(tags) > MAX_TAGS:
        failures.append(
            ValidationFailure(
                FailureCode.TAG_COUNT,
                f"at most {MAX_TAGS} tags allowed, got {len(tags)}",
            )
        )
    duplicates = corpus.find_duplicates(title, body, tags, duplicate_threshold)
    if duplicates:
        dup_id, similarity = duplicates[0]
        if duplicate_visible is None or dup_id in duplicate_visible:
            failures.append(
                ValidationFailure(
                    FailureCode.NEAR_DUPLICATE,
                    f"near-duplicate of idea {dup_id} (similarity {similarity:.3f})",
                    duplicate_of=dup_id,
                )
            )
        else:
            failures.append(
                ValidationFailure(
                    FailureCode.NEAR_DUPLICATE,
                    "near-duplicate of an existing idea that is not visible to you",
                )
            )
    return ValidationReport(tuple(failures))


class ReviewOutcome(str, Enum):
    PUBLISH = "publish"
    REJECT = "reject"


@dataclass(frozen=True)
class ReviewDecision:
    review_id: int
    idea_id: int
    reviewer_id: int
    outcome: ReviewOutcome
    reason: str
    decided_at: datetime

    def to_payload(self) -> dict:
        return {
            "review_id": self.review_id,
            "idea_id": self.idea_id,
            "reviewer_id": self.reviewer_id,
            "outcome": self.outcome.value,
            "reason": self.reason,
            "decided_at": format_ts(self.decided_at),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "ReviewDecision":
        return cls(
            review_id=payload["review_id"],
            idea_id=payload["idea_id"],
            reviewer_id=payload["reviewer_id"],
            outcome=ReviewOutcome(payload["outcome"]),
            reason=payload["reason"],
            decided_at=parse_ts(payload["decided_at"]),
        )


__all__ = [
    "DUPLICATE_THRESHOLD",
    "IDEA_TRANSITIONS",
    "FailureCode",
    "ReviewDecision",
    "ReviewOutcome",
    "ValidationFailure",
    "ValidationReport",
    "check_idea_transition",
    "validate_idea",
]
