"""Project groups, membership, tasks, and progress tracking."""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Iterable, Optional

from .errors import IllegalTransition
from .model import format_ts, parse_ts, utc_now


class TaskStatus(str, Enum):
    OPEN = "open"
    IN_PROGRESS = "in_progress"
    DONE = "done"


# Reopening goes through InProgress; Done never jumps straight back to Open.
TASK_TRANSITIONS: dict[TaskStatus, frozenset[TaskStatus]] = {
    TaskStatus.OPEN: frozenset({TaskStatus.IN_PROGRESS}),
    TaskStatus.IN_PROGRESS: frozenset({TaskStatus.DONE}),
    TaskStatus.DONE: frozenset({TaskStatus.IN_PROGRESS}),
}


def check_task_transition(current: TaskStatus, new: TaskStatus) -> None:
    """No-op when the status is unchanged; raises IllegalTransition otherwise
    unless the edge is in the table."""
    if new is current:
        return
    if new not in TASK_TRANSITIONS[current]:
        raise IllegalTransition(
            f"task status {current.value} -> {new.value} is not allowed"
        )


@dataclass
class Project:
    project_id: int
    idea_id: int
    name: str
    owner_id: int
    member_ids: set[int] = field(default_factory=set)
    created_at: datetime = field(default_factory=utc_now)

    def __post_init__(self) -> None:
        self.member_ids.add(self.owner_id)

    def to_payload(self) -> dict:
        return {
            "project_id": self.project_id,
            "idea_id": self.idea_id,
            "name": self.name,
            "owner_id": self.owner_id,
            "member_ids": sorted(self.member_ids),
            "created_at": format_ts(self.created_at),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Project":
        return cls(
            project_id=payload["project_id"],
            idea_id=payload["idea_id"],
            name=payload["name"],
            owner_id=payload["owner_id"],
            member_ids=set(payload["member_ids"]),
            created_at=parse_ts(payload["created_at"]),
        )


@dataclass
class Task:
    task_id: str
    project_id: int
    title: str
    assignee_id: Optional[int] = None
    deadline: Optional[datetime] = None
    status: TaskStatus = TaskStatus.OPEN
    created_at: datetime = field(default_factory=utc_now)
    updated_at: datetime = field(default_factory=utc_now)

    def to_payload(self) -> dict:
        return {
            "task_id": self.task_id,
            "project_id": self.project_id,
            "title": self.title,
            "assignee_id": self.assignee_id,
            "deadline": format_ts(self.deadline) if self.deadline else None,
            "status": self.status.value,
            "created_at": format_ts(self.created_at),
            "updated_at": format_ts(self.updated_at),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "Task":
        return cls(
            task_id=payload["task_id"],
            project_id=payload["project_id"],
            title=payload["title"],
            assignee_id=payload["assignee_id"],
            deadline=parse_ts(payload["deadline"]) if payload["deadline"] else None,
            status=TaskStatus(payload["status"]),
            created_at=parse_ts(payload["created_at"]),
            updated_at=parse_ts(payload["updated_at"]),
        )


def project_progress(tasks: Iterable[Task]) -> float:
    """Fraction of tasks Done; 0.0 for a project with no tasks."""
    tasks = list(tasks)
    if not tasks:
        return 0.0
    done = sum(1 for t in tasks if t.status is TaskStatus.DONE)
    return done / len(tasks)
