from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from random import Random
from typing import Optional

import pytest

from ideaforge import Platform, PlatformConfig, UserAccount, Visibility
from ideaforge.model import IdeaState
from ideaforge.lifecycle import ReviewOutcome


class SteppingClock:
    """Deterministic clock: every call advances by a fixed step."""

    def __init__(
        self,
        start: datetime = datetime(2026, 1, 1, tzinfo=timezone.utc),
        step_seconds: float = 1.0,
    ) -> None:
        self._now = start
        self._step = timedelta(seconds=step_seconds)

    def __call__(self) -> datetime:
        current = self._now
        self._now = current + self._step
        return current

    def advance(self, seconds: float) -> None:
        self._now += timedelta(seconds=seconds)


def fast_config(**overrides) -> PlatformConfig:
    defaults = dict(
        password_iterations=2,
        bootstrap_admin_email="root@example.com",
        bootstrap_admin_password="admin-secret-1",
    )
    defaults.update(overrides)
    return PlatformConfig(**defaults)


def make_platform(
    data_dir=None, seed: int = 7, clock: Optional[SteppingClock] = None, **overrides
) -> Platform:
    platform = Platform.open(
        data_dir,
        config=fast_config(**overrides),
        clock=clock or SteppingClock(),
        rng=Random(seed),
    )
    platform.bootstrap()
    return platform


@dataclass
class Population:
    platform: Platform
    admin: UserAccount      # group 1
    chief: UserAccount      # group 2
    editor: UserAccount     # group 3
    visitor: UserAccount    # group 4
    visitor2: UserAccount   # group 4
    guest_user: UserAccount  # group 5 (a demoted account; anonymous guests are None)


def make_population(data_dir=None, **overrides) -> Population:
    platform = make_platform(data_dir, **overrides)
    admin = platform.get_user(1)

    def user(email: str, name: str, group_id: int) -> UserAccount:
        account = platform.register_user(email, name, "password-123")
        if group_id != 4:
            platform.set_user_group(admin, account.user_id, group_id)
        return account

    return Population(
        platform=platform,
        admin=admin,
        chief=user("chief@example.com", "Casey", 2),
        editor=user("editor@example.com", "Eddie", 3),
        visitor=user("visitor@example.com", "Vera", 4),
        visitor2=user("visitor2@example.com", "Viktor", 4),
        guest_user=user("guest@example.com", "Gus", 5),
    )


def publish_idea(
    pop: Population,
    author: UserAccount,
    title: str,
    body: str,
    tags=(),
    visibility: Visibility = Visibility.PUBLIC,
):
    idea = pop.platform.submit_idea(author, title, body, tags, visibility)
    pop.platform.review_idea(pop.editor, idea.idea_id, ReviewOutcome.PUBLISH)
    refreshed = pop.platform.get_idea(pop.editor, idea.idea_id)
    assert refreshed.state is IdeaState.PUBLISHED
    return refreshed


@pytest.fixture
def pop() -> Population:
    return make_population()


@pytest.fixture
def platform() -> Platform:
    return make_platform()
