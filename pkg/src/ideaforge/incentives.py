"""Gamification: an append-only points ledger and reputation derived from it.

Events are never mutated or deleted; replaying the ledger from empty must
reproduce every reputation exactly. Double awards are prevented by keying
each event on (kind, source_ref).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Iterable

from .model import format_ts, parse_ts, utc_now


class PointKind(str, Enum):
    IDEA_PUBLISHED = "IdeaPublished"
    PROJECT_CREATED = "ProjectCreated"
    TASK_DONE = "TaskDone"
    COMMENT_POSTED = "CommentPosted"
    RATING_CAST = "RatingCast"


# One documented table; values are configuration, not paper facts.
POINT_VALUES: dict[PointKind, int] = {
    PointKind.IDEA_PUBLISHED: 20,
    PointKind.PROJECT_CREATED: 5,
    PointKind.TASK_DONE: 3,
    PointKind.COMMENT_POSTED: 2,
    PointKind.RATING_CAST: 1,
}


@dataclass(frozen=True)
class PointsEvent:
    event_id: int
    user_id: int
    kind: PointKind
    points: int
    source_ref: str
    created_at: datetime = field(default_factory=utc_now)

    def to_payload(self) -> dict:
        return {
            "event_id": self.event_id,
            "user_id": self.user_id,
            "kind": self.kind.value,
            "points": self.points,
            "source_ref": self.source_ref,
            "created_at": format_ts(self.created_at),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "PointsEvent":
        return cls(
            event_id=payload["event_id"],
            user_id=payload["user_id"],
            kind=PointKind(payload["kind"]),
            points=payload["points"],
            source_ref=payload["source_ref"],
            created_at=parse_ts(payload["created_at"]),
        )


class PointsLedger:
    """In-memory view of the event stream; persistence belongs to the caller.

    ``point_values`` only constrains *new* events via ``record``; events
    replayed through the constructor are trusted as written.
    """

    def __init__(
        self,
        events: Iterable[PointsEvent] = (),
        point_values: dict[PointKind, int] | None = None,
    ) -> None:
        self._point_values = dict(point_values or POINT_VALUES)
        self._events: list[PointsEvent] = []
        self._by_source: dict[tuple[PointKind, str], PointsEvent] = {}
        self._reputation: dict[int, int] = {}
        for event in sorted(events, key=lambda e: e.event_id):
            self._apply(event)

    def _apply(self, event: PointsEvent) -> None:
        self._events.append(event)
        self._by_source[(event.kind, event.source_ref)] = event
        self._reputation[event.user_id] = (
            self._reputation.get(event.user_id, 0) + event.points
        )

    def existing(self, kind: PointKind, source_ref: str) -> PointsEvent | None:
        return self._by_source.get((kind, source_ref))

    def record(self, event: PointsEvent) -> None:
        """Append a freshly awarded event; caller guarantees (kind, source_ref)
        was checked via ``existing`` first."""
        if (event.kind, event.source_ref) in self._by_source:
            raise ValueError(
                f"duplicate award for {event.kind.value}/{event.source_ref}"
            )
        if event.points != self._point_values[event.kind]:
            raise ValueError(
                f"points {event.points} do not match kind {event.kind.value}"
            )
        self._apply(event)

    def reputation(self, user_id: int) -> int:
        return self._reputation.get(user_id, 0)

    def events(self) -> list[PointsEvent]:
        return list(self._events)

    def total_points(self) -> int:
        return sum(e.points for e in self._events)

    def __len__(self) -> int:
        return len(self._events)
