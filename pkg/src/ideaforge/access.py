"""Group policy enforcement and per-idea visibility rules.

The permission matrix is one fixed, auditable table; the same table is
checked into ``docs/permission_matrix.tsv`` and tests diff runtime behavior
against that file. All functions here are pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Collection, Optional

from .model import (
    ADMIN_PANEL_GROUPS,
    GROUP_ADMINISTRATORS,
    GROUP_GUESTS,
    GROUP_VISITORS,
    Idea,
    IdeaState,
    UserAccount,
    Visibility,
)


class Action(str, Enum):
    READ_PUBLIC = "ReadPublic"
    SUBMIT_IDEA = "SubmitIdea"
    RATE_IDEA = "RateIdea"
    COMMENT_IDEA = "CommentIdea"
    CREATE_PROJECT = "CreateProject"
    JOIN_PROJECT = "JoinProject"
    MODERATE_IDEAS = "ModerateIdeas"
    MANAGE_USERS = "ManageUsers"
    ACCESS_ADMIN_PANEL = "AccessAdminPanel"
    SET_VISIBILITY = "SetVisibility"


_CONTRIBUTOR_ACTIONS = frozenset(
    {
        Action.READ_PUBLIC,
        Action.SUBMIT_IDEA,
        Action.RATE_IDEA,
        Action.COMMENT_IDEA,
        Action.CREATE_PROJECT,
        Action.JOIN_PROJECT,
        Action.SET_VISIBILITY,
    }
)
_MODERATOR_ACTIONS = _CONTRIBUTOR_ACTIONS | {
    Action.MODERATE_IDEAS,
    Action.ACCESS_ADMIN_PANEL,
}

# group_id -> set of allowed actions. Guests are read-only; Visitors are
# registered contributors; groups 1-3 add the Administration Panel; only
# Administrators manage users.
GROUP_ACTIONS: dict[int, frozenset[Action]] = {
    1: frozenset(_MODERATOR_ACTIONS | {Action.MANAGE_USERS}),
    2: _MODERATOR_ACTIONS,
    3: _MODERATOR_ACTIONS,
    4: _CONTRIBUTOR_ACTIONS,
    5: frozenset({Action.READ_PUBLIC}),
}

PERMISSION_MATRIX: dict[tuple[int, Action], bool] = {
    (group_id, action): action in allowed
    for group_id, allowed in GROUP_ACTIONS.items()
    for action in Action
}


@dataclass(frozen=True)
class Decision:
    allowed: bool
    reason: str

    def __bool__(self) -> bool:
        return self.allowed


def can(user: Optional[UserAccount], action: Action) -> Decision:
    """Matrix lookup for a user (``None`` means the anonymous Guest)."""
    group_id = GROUP_GUESTS if user is None else user.group_id
    if (group_id, action) not in PERMISSION_MATRIX:
        return Decision(False, f"unknown group {group_id}")
    if PERMISSION_MATRIX[(group_id, action)]:
        return Decision(True, f"group {group_id} may {action.value}")
    return Decision(False, f"group {group_id} may not {action.value}")


def visible_to(
    idea: Idea,
    viewer: Optional[UserAccount],
    team_member_ids: Collection[int] = (),
) -> bool:
    """Whether ``viewer`` may read ``idea``.

    ``team_member_ids`` is the union of members over projects attached to
    the idea; callers with no project context pass nothing and Team ideas
    stay author/moderator-only.
    """
    if viewer is not None:
        if viewer.group_id in ADMIN_PANEL_GROUPS:
            return True
        if viewer.user_id == idea.author_id:
            return True
    if idea.state is not IdeaState.PUBLISHED:
        return False
    if idea.visibility is Visibility.PUBLIC:
        return True
    if idea.visibility is Visibility.TEAM:
        return viewer is not None and viewer.user_id in set(team_member_ids)
    return False  # Private


def may_change_visibility(user: Optional[UserAccount], idea: Idea) -> bool:
    """Authors may retarget their own ideas; Administrators may override."""
    if user is None:
        return False
    if user.group_id == GROUP_ADMINISTRATORS:
        return True
    return user.user_id == idea.author_id and bool(can(user, Action.SET_VISIBILITY))


def matrix_rows() -> list[tuple[int, str, bool]]:
    """The full matrix as (group_id, action, allow) rows in a stable order;
    mirrors the golden TSV byte for byte."""
    return [
        (group_id, action.value, PERMISSION_MATRIX[(group_id, action)])
        for group_id in sorted(GROUP_ACTIONS)
        for action in Action
    ]


assert all(
    GROUP_ACTIONS[GROUP_GUESTS] <= GROUP_ACTIONS[GROUP_VISITORS] <= GROUP_ACTIONS[g]
    for g in ADMIN_PANEL_GROUPS
), "permission monotonicity broken"
