"""Core domain entities, their validity rules, and shared value helpers.

Everything here is a plain value type: no I/O, no hidden state. Persistence
and permission checks live elsewhere (`store`, `platform`, `access`).
"""
from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Collection, Iterable, Optional

from .errors import AlreadySeeded, BadRequest, EmptyTag

# Validation bounds applied by the lifecycle gate (see lifecycle.validate_idea).
TITLE_MIN_LEN = 3
TITLE_MAX_LEN = 200
BODY_MIN_LEN = 20
BODY_MAX_LEN = 20_000
MAX_TAGS = 10

DISPLAY_NAME_MAX_LEN = 80
COMMENT_MAX_LEN = 5_000
PROJECT_NAME_MAX_LEN = 120

RATING_MIN = 1
RATING_MAX = 5

_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")

# Clock is injected wherever entities are created so tests control time.
Clock = Callable[[], datetime]


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


_TS_FORMAT = "%Y-%m-%dT%H:%M:%S.%fZ"


def format_ts(dt: datetime) -> str:
    """RFC 3339 UTC timestamp, fixed width so string order == time order."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).strftime(_TS_FORMAT)


def parse_ts(raw: str) -> datetime:
    return datetime.strptime(raw, _TS_FORMAT).replace(tzinfo=timezone.utc)


class Visibility(str, Enum):
    PRIVATE = "private"
    TEAM = "team"
    PUBLIC = "public"


class IdeaState(str, Enum):
    DRAFT = "draft"
    SUBMITTED = "submitted"
    PUBLISHED = "published"
    REJECTED = "rejected"


_WHITESPACE_RUN = re.compile(r"\s+")
_HYPHEN_RUN = re.compile(r"-{2,}")


def normalize_tag(raw: str) -> str:
    """Canonical tag form: casefolded, whitespace runs collapsed to single
    hyphens, everything but Unicode letters/digits/hyphens dropped.

    Idempotent: the output is a fixed point of the rules.
    """
    text = unicodedata.normalize("NFC", raw).strip().casefold()
    text = _WHITESPACE_RUN.sub("-", text)
    text = "".join(ch for ch in text if ch == "-" or ch.isalnum())
    text = _HYPHEN_RUN.sub("-", text).strip("-")
    if not text:
        raise EmptyTag(f"tag {raw!r} is empty after normalization")
    return text


def normalize_tags(raw_tags: Iterable[str]) -> set[str]:
    return {normalize_tag(t) for t in raw_tags}


def validate_email(email: str) -> str:
    email = email.strip()
    if len(email) > 254 or not _EMAIL_RE.match(email):
        raise BadRequest(f"invalid email address: {email!r}")
    return email


def validate_display_name(name: str) -> str:
    name = name.strip()
    if not 1 <= len(name) <= DISPLAY_NAME_MAX_LEN:
        raise BadRequest(
            f"display_name must be 1-{DISPLAY_NAME_MAX_LEN} chars, got {len(name)}"
        )
    return name


@dataclass(frozen=True)
class UserGroup:
    group_id: int
    name: str
    admin_panel_access: bool

    def to_payload(self) -> dict:
        return {
            "group_id": self.group_id,
            "name": self.name,
            "admin_panel_access": self.admin_panel_access,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "UserGroup":
        return cls(
            group_id=payload["group_id"],
            name=payload["name"],
            admin_panel_access=payload["admin_panel_access"],
        )


# The five fixed groups. Groups 1-3 hold Administration Panel access;
# group 1 additionally manages users (see access.PERMISSION_MATRIX).
GROUP_ADMINISTRATORS = 1
GROUP_CHIEF_EDITORS = 2
GROUP_EDITORS = 3
GROUP_VISITORS = 4
GROUP_GUESTS = 5

DEFAULT_GROUPS: tuple[UserGroup, ...] = (
    UserGroup(GROUP_ADMINISTRATORS, "Administrators", True),
    UserGroup(GROUP_CHIEF_EDITORS, "Chief Editors", True),
    UserGroup(GROUP_EDITORS, "Editor", True),
    UserGroup(GROUP_VISITORS, "Visitors", False),
    UserGroup(GROUP_GUESTS, "Guests", False),
)

ADMIN_PANEL_GROUPS = frozenset({GROUP_ADMINISTRATORS, GROUP_CHIEF_EDITORS, GROUP_EDITORS})


def seed_default_groups(existing: Collection[UserGroup] = ()) -> list[UserGroup]:
    """Return the five fixed groups; refuses to run twice."""
    if existing:
        raise AlreadySeeded("user groups already seeded")
    return list(DEFAULT_GROUPS)


@dataclass
class UserAccount:
    user_id: int
    display_name: str
    email: str
    group_id: int
    interest_tags: set[str] = field(default_factory=set)
    created_at: datetime = field(default_factory=utc_now)

    def to_payload(self) -> dict:
        return {
            "user_id": self.user_id,
            "display_name": self.display_name,
            "email": self.email,
            "group_id": self.group_id,
            "interest_tags": sorted(self.interest_tags),
            "created_at": format_ts(self.created_at),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "UserAccount":
        return cls(
            user_id=payload["user_id"],
            display_name=payload["display_name"],
            email=payload["email"],
            group_id=payload["group_id"],
            interest_tags=set(payload["interest_tags"]),
            created_at=parse_ts(payload["created_at"]),
        )


@dataclass
class Idea:
    idea_id: int
    author_id: int
    title: str
    body: str
    tags: set[str] = field(default_factory=set)
    visibility: Visibility = Visibility.PRIVATE
    state: IdeaState = IdeaState.DRAFT
    rejection_reason: Optional[str] = None
    created_at: datetime = field(default_factory=utc_now)
    updated_at: datetime = field(default_factory=utc_now)

    def to_payload(self) -> dict:
        return {
            "idea_id": self.idea_id,
            "author_id": self.author_id,
            "title": self.title,
            "body": self.body,
            "tags": sorted(self.tags),
            "visibility": self.visibility.value,
            "state": self.state.value,
            "rejection_reason": self.rejection_reason,
            "created_at": format_ts(self.created_at),
            "updated_at": format_ts(self.updated_at),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Idea":
        return cls(
            idea_id=payload["idea_id"],
            author_id=payload["author_id"],
            title=payload["title"],
            body=payload["body"],
            tags=set(payload["tags"]),
            visibility=Visibility(payload["visibility"]),
            state=IdeaState(payload["state"]),
            rejection_reason=payload["rejection_reason"],
            created_at=parse_ts(payload["created_at"]),
            updated_at=parse_ts(payload["updated_at"]),
        )


@dataclass
class Rating:
    """One rater's four criterion scores for one idea; latest write wins."""

    idea_id: int
    rater_id: int
    relevance: int
    feasibility: int
    originality: int
    impact: int
    created_at: datetime = field(default_factory=utc_now)

    CRITERIA = ("relevance", "feasibility", "originality", "impact")

    def scores(self) -> tuple[int, int, int, int]:
        return (self.relevance, self.feasibility, self.originality, self.impact)

    def rater_mean(self) -> float:
        return sum(self.scores()) / 4.0

    def to_payload(self) -> dict:
        return {
            "idea_id": self.idea_id,
            "rater_id": self.rater_id,
            "relevance": self.relevance,
            "feasibility": self.feasibility,
            "originality": self.originality,
            "impact": self.impact,
            "created_at": format_ts(self.created_at),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Rating":
        return cls(
            idea_id=payload["idea_id"],
            rater_id=payload["rater_id"],
            relevance=payload["relevance"],
            feasibility=payload["feasibility"],
            originality=payload["originality"],
            impact=payload["impact"],
            created_at=parse_ts(payload["created_at"]),
        )


@dataclass
class Comment:
    comment_id: int
    idea_id: int
    author_id: int
    body: str
    parent_comment_id: Optional[int] = None
    created_at: datetime = field(default_factory=utc_now)

    def to_payload(self) -> dict:
        return {
            "comment_id": self.comment_id,
            "idea_id": self.idea_id,
            "author_id": self.author_id,
            "body": self.body,
            "parent_comment_id": self.parent_comment_id,
            "created_at": format_ts(self.created_at),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Comment":
        return cls(
            comment_id=payload["comment_id"],
            idea_id=payload["idea_id"],
            author_id=payload["author_id"],
            body=payload["body"],
            parent_comment_id=payload["parent_comment_id"],
            created_at=parse_ts(payload["created_at"]),
        )
