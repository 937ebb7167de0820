"""Exception hierarchy shared by all ideaforge modules.

Every error carries a stable ``code`` (snake_case, serialized in API error
payloads) and the HTTP status the API layer responds with.
"""
from __future__ import annotations

from typing import Any


class IdeaForgeError(Exception):
    code = "error"
    http_status = 500

    def __init__(self, message: str = "", **details: Any) -> None:
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.details = details

    def to_payload(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"error": self.code, "message": self.message}
        if self.details:
            payload.update(self.details)
        return payload


class BadRequest(IdeaForgeError):
    code = "bad_request"
    http_status = 400


class BadCredentials(IdeaForgeError):
    code = "bad_credentials"
    http_status = 401


class SessionRequired(IdeaForgeError):
    code = "session_required"
    http_status = 401


class SessionExpired(IdeaForgeError):
    code = "session_expired"
    http_status = 401


class PermissionDenied(IdeaForgeError):
    code = "permission_denied"
    http_status = 403


class UnknownEntity(IdeaForgeError):
    code = "unknown_entity"
    http_status = 404


class UnknownUser(UnknownEntity):
    code = "unknown_user"


class UnknownIdea(UnknownEntity):
    code = "unknown_idea"


class UnknownProject(UnknownEntity):
    code = "unknown_project"


class UnknownTask(UnknownEntity):
    code = "unknown_task"


class UnknownGroup(UnknownEntity):
    code = "unknown_group"


class UnknownSource(UnknownEntity):
    code = "unknown_source"


class InvalidState(IdeaForgeError):
    code = "invalid_state"
    http_status = 409


class VersionConflict(IdeaForgeError):
    code = "version_conflict"
    http_status = 409


class EmailTaken(IdeaForgeError):
    code = "email_taken"
    http_status = 409


class AlreadySeeded(IdeaForgeError):
    code = "already_seeded"
    http_status = 409


class IdeaNotPublished(IdeaForgeError):
    code = "idea_not_published"
    http_status = 409


class AlreadyMember(IdeaForgeError):
    code = "already_member"
    http_status = 409


class NotMember(IdeaForgeError):
    code = "not_member"
    http_status = 409


class OwnerMustTransfer(IdeaForgeError):
    code = "owner_must_transfer"
    http_status = 409


class IllegalTransition(IdeaForgeError):
    code = "illegal_transition"
    http_status = 409


class ValidationFailed(IdeaForgeError):
    """Submission rejected by the validation gate; carries the full report."""

    code = "validation_failed"
    http_status = 422

    def __init__(self, report: Any, message: str = "idea failed validation") -> None:
        super().__init__(message)
        self.report = report

    def to_payload(self) -> dict[str, Any]:
        payload = super().to_payload()
        payload["report"] = self.report.to_payload()
        return payload


class EmptyTag(IdeaForgeError):
    code = "empty_tag"
    http_status = 422


class MissingReason(IdeaForgeError):
    code = "missing_reason"
    http_status = 422


class SelfRating(IdeaForgeError):
    code = "self_rating"
    http_status = 422


class ScoreOutOfRange(IdeaForgeError):
    code = "score_out_of_range"
    http_status = 422


class BadParent(IdeaForgeError):
    code = "bad_parent"
    http_status = 422


class BodyLength(IdeaForgeError):
    code = "body_length"
    http_status = 422


class AssigneeNotMember(IdeaForgeError):
    code = "assignee_not_member"
    http_status = 422


class StoreCorruption(IdeaForgeError):
    code = "store_corruption"


class BindFailure(IdeaForgeError):
    code = "bind_failure"
