"""The assembled service: every user-facing operation, wired through
access control, the persistent store, the search index, and the points
ledger.

All mutation is serialized by one lock (the single committer); reads take
the same lock briefly, so every caller sees a consistent snapshot. Time and
randomness are injected so tests and replays are deterministic.
"""
from __future__ import annotations

import base64
import hashlib
import re
import secrets
import threading
from datetime import datetime, timedelta
from random import Random
from typing import Iterable, Iterator, Optional

from . import access, recommend
from .access import Action
from .collab import Project, Task, TaskStatus, check_task_transition, project_progress
from .config import PlatformConfig
from .errors import (
    AlreadyMember,
    AssigneeNotMember,
    BadCredentials,
    BadParent,
    BadRequest,
    BodyLength,
    EmailTaken,
    IdeaNotPublished,
    InvalidState,
    MissingReason,
    NotMember,
    OwnerMustTransfer,
    PermissionDenied,
    ScoreOutOfRange,
    SelfRating,
    SessionExpired,
    UnknownGroup,
    UnknownIdea,
    UnknownProject,
    UnknownSource,
    UnknownTask,
    UnknownUser,
    ValidationFailed,
    VersionConflict,
)
from .feedback import AggregateScore, aggregate_ratings, rank_key
from .incentives import PointKind, PointsEvent, PointsLedger
from .lifecycle import (
    ReviewDecision,
    ReviewOutcome,
    check_idea_transition,
    validate_idea,
)
from .model import (
    COMMENT_MAX_LEN,
    GROUP_GUESTS,
    PROJECT_NAME_MAX_LEN,
    RATING_MAX,
    RATING_MIN,
    Clock,
    Comment,
    Idea,
    IdeaState,
    Rating,
    UserAccount,
    UserGroup,
    Visibility,
    format_ts,
    normalize_tags,
    parse_ts,
    seed_default_groups,
    utc_now,
    validate_display_name,
    validate_email,
)
from .search import QueryResult, SearchIndex
from .store import Store

_TASK_ID_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")

KIND_GROUP = "group"
KIND_USER = "user"
KIND_CREDENTIAL = "credential"
KIND_SESSION = "session"
KIND_IDEA = "idea"
KIND_RATING = "rating"
KIND_COMMENT = "comment"
KIND_PROJECT = "project"
KIND_TASK = "task"
KIND_REVIEW = "review"
KIND_POINTS_EVENT = "points_event"


class Platform:
    """One platform instance per data directory; thread-safe."""

    def __init__(
        self,
        store: Optional[Store] = None,
        config: Optional[PlatformConfig] = None,
        clock: Clock = utc_now,
        rng: Optional[Random] = None,
    ) -> None:
        self.config = config or PlatformConfig()
        self.store = store if store is not None else Store()
        self._clock = clock
        self._rng = rng
        self._lock = threading.RLock()

        self._groups: dict[int, UserGroup] = {}
        self._users: dict[int, UserAccount] = {}
        self._user_by_email: dict[str, int] = {}
        self._credentials: dict[int, dict] = {}
        self._sessions: dict[str, dict] = {}
        self._ideas: dict[int, Idea] = {}
        self._ratings: dict[tuple[int, int], Rating] = {}
        self._comments: dict[int, Comment] = {}
        self._projects: dict[int, Project] = {}
        self._tasks: dict[str, Task] = {}
        self._reviews: dict[int, ReviewDecision] = {}

        self._versions: dict[tuple[str, str], int] = {}
        self._load()
        self._ledger = PointsLedger(
            (PointsEvent.from_payload(p) for _, _, p in self.store.items(KIND_POINTS_EVENT)),
            point_values={k: self.config.points_for(k) for k in PointKind},
        )
        self._next_event_id = max(
            (e.event_id for e in self._ledger.events()), default=0
        ) + 1
        self._index = SearchIndex.build(
            self._ideas.values(),
            k1=self.config.bm25_k1,
            b=self.config.bm25_b,
            field_boosts=self.config.field_boosts(),
        )

    @classmethod
    def open(
        cls,
        data_dir: Optional[str],
        config: Optional[PlatformConfig] = None,
        clock: Clock = utc_now,
        rng: Optional[Random] = None,
    ) -> "Platform":
        store = Store(data_dir)
        return cls(store=store, config=config, clock=clock, rng=rng)

    def close(self) -> None:
        self.store.close()

    # -- loading and seeding ------------------------------------------------

    def _load(self) -> None:
        for record_id, version, payload in self.store.items(KIND_GROUP):
            group = UserGroup.from_payload(payload)
            self._groups[group.group_id] = group
            self._versions[(KIND_GROUP, record_id)] = version
        for record_id, version, payload in self.store.items(KIND_USER):
            user = UserAccount.from_payload(payload)
            self._users[user.user_id] = user
            self._user_by_email[user.email.lower()] = user.user_id
            self._versions[(KIND_USER, record_id)] = version
        for record_id, version, payload in self.store.items(KIND_CREDENTIAL):
            self._credentials[int(record_id)] = payload
            self._versions[(KIND_CREDENTIAL, record_id)] = version
        for record_id, version, payload in self.store.items(KIND_SESSION):
            self._sessions[payload["token"]] = payload
            self._versions[(KIND_SESSION, record_id)] = version
        for record_id, version, payload in self.store.items(KIND_IDEA):
            idea = Idea.from_payload(payload)
            self._ideas[idea.idea_id] = idea
            self._versions[(KIND_IDEA, record_id)] = version
        for record_id, version, payload in self.store.items(KIND_RATING):
            rating = Rating.from_payload(payload)
            self._ratings[(rating.idea_id, rating.rater_id)] = rating
            self._versions[(KIND_RATING, record_id)] = version
        for record_id, version, payload in self.store.items(KIND_COMMENT):
            comment = Comment.from_payload(payload)
            self._comments[comment.comment_id] = comment
            self._versions[(KIND_COMMENT, record_id)] = version
        for record_id, version, payload in self.store.items(KIND_PROJECT):
            project = Project.from_payload(payload)
            self._projects[project.project_id] = project
            self._versions[(KIND_PROJECT, record_id)] = version
        for record_id, version, payload in self.store.items(KIND_TASK):
            task = Task.from_payload(payload)
            self._tasks[task.task_id] = task
            self._versions[(KIND_TASK, record_id)] = version
        for record_id, version, payload in self.store.items(KIND_REVIEW):
            decision = ReviewDecision.from_payload(payload)
            self._reviews[decision.review_id] = decision
            self._versions[(KIND_REVIEW, record_id)] = version
        for record_id, version, _ in self.store.items(KIND_POINTS_EVENT):
            self._versions[(KIND_POINTS_EVENT, record_id)] = version

        self._next_user_id = max(self._users, default=0) + 1
        self._next_idea_id = max(self._ideas, default=0) + 1
        self._next_comment_id = max(self._comments, default=0) + 1
        self._next_project_id = max(self._projects, default=0) + 1
        self._next_review_id = max(self._reviews, default=0) + 1

    def ensure_groups(self) -> bool:
        """Seed the five fixed groups when the table is empty."""
        with self._lock:
            if self._groups:
                return False
            for group in seed_default_groups():
                self._put(KIND_GROUP, str(group.group_id), group.to_payload())
                self._groups[group.group_id] = group
            return True

    def bootstrap(self) -> dict:
        """First-run seeding: the five fixed groups plus the configured
        bootstrap Administrator. Safe to call on every startup."""
        with self._lock:
            report: dict = {"seeded_groups": False, "created_admin": None,
                            "generated_password": None}
            report["seeded_groups"] = self.ensure_groups()
            if not any(u.group_id == 1 for u in self._users.values()):
                password = self.config.bootstrap_admin_password
                if password is None:
                    password = self._new_token()
                    report["generated_password"] = password
                admin = self._create_user(
                    email=self.config.bootstrap_admin_email,
                    display_name="Administrator",
                    password=password,
                    group_id=1,
                )
                report["created_admin"] = admin.user_id
            return report

    # -- internals ------------------------------------------------------------

    def _now(self) -> datetime:
        return self._clock()

    def _random_bytes(self, n: int) -> bytes:
        if self._rng is not None:
            return bytes(self._rng.getrandbits(8) for _ in range(n))
        return secrets.token_bytes(n)

    def _new_token(self) -> str:
        raw = self._random_bytes(16)  # 128 bits
        return base64.urlsafe_b64encode(raw).rstrip(b"=").decode("ascii")

    def _hash_password(self, password: str, salt: bytes) -> str:
        digest = hashlib.pbkdf2_hmac(
            "sha256", password.encode("utf-8"), salt,
            max(1, self.config.password_iterations),
        )
        return digest.hex()

    def _put(self, kind: str, record_id: str, payload: dict) -> int:
        expected = self._versions.get((kind, record_id), 0)
        version = self.store.put(kind, record_id, payload, expected_version=expected)
        self._versions[(kind, record_id)] = version
        return version

    def version_of(self, kind: str, record_id: str) -> int:
        return self._versions.get((kind, record_id), 0)

    def _require(self, user: Optional[UserAccount], action: Action) -> UserAccount:
        decision = access.can(user, action)
        if not decision:
            raise PermissionDenied(decision.reason)
        assert user is not None  # every non-ReadPublic action is denied to Guests
        return user

    def _check_read(self, user: Optional[UserAccount]) -> None:
        decision = access.can(user, Action.READ_PUBLIC)
        if not decision:
            raise PermissionDenied(decision.reason)

    def _team_member_ids(self, idea_id: int) -> set[int]:
        members: set[int] = set()
        for project in self._projects.values():
            if project.idea_id == idea_id:
                members |= project.member_ids
        return members

    def _visible(self, idea: Idea, viewer: Optional[UserAccount]) -> bool:
        return access.visible_to(idea, viewer, self._team_member_ids(idea.idea_id))

    def _visible_idea(self, viewer: Optional[UserAccount], idea_id) -> Idea:
        idea = self._ideas.get(idea_id)
        if idea is None or not self._visible(idea, viewer):
            raise UnknownIdea(f"no idea {idea_id}")
        return idea

    def _visible_published_ids(self, viewer: Optional[UserAccount]) -> set[int]:
        return {
            idea.idea_id
            for idea in self._ideas.values()
            if idea.state is IdeaState.PUBLISHED and self._visible(idea, viewer)
        }

    # -- users and sessions ---------------------------------------------------

    def _create_user(
        self,
        email: str,
        display_name: str,
        password: str,
        group_id: int,
        interest_tags: Iterable[str] = (),
    ) -> UserAccount:
        email = validate_email(email)
        display_name = validate_display_name(display_name)
        if len(password) < self.config.min_password_length:
            raise BadRequest(
                f"password must be at least {self.config.min_password_length} chars"
            )
        if email.lower() in self._user_by_email:
            raise EmailTaken(f"email {email} is already registered")
        if group_id not in self._groups:
            raise UnknownGroup(f"no group {group_id}")
        user = UserAccount(
            user_id=self._next_user_id,
            display_name=display_name,
            email=email,
            group_id=group_id,
            interest_tags=normalize_tags(interest_tags),
            created_at=self._now(),
        )
        self._next_user_id += 1
        salt = self._random_bytes(16)
        credential = {
            "user_id": user.user_id,
            "salt": salt.hex(),
            "password_hash": self._hash_password(password, salt),
            "iterations": max(1, self.config.password_iterations),
        }
        self._put(KIND_USER, str(user.user_id), user.to_payload())
        self._put(KIND_CREDENTIAL, str(user.user_id), credential)
        self._users[user.user_id] = user
        self._user_by_email[email.lower()] = user.user_id
        self._credentials[user.user_id] = credential
        return user

    def register_user(
        self,
        email: str,
        display_name: str,
        password: str,
        interest_tags: Iterable[str] = (),
    ) -> UserAccount:
        """Open registration; everyone starts as a Visitor."""
        with self._lock:
            return self._create_user(
                email, display_name, password, group_id=4,
                interest_tags=interest_tags,
            )

    def ensure_admin(self, email: str, password: str) -> UserAccount:
        """Create the bootstrap Administrator, or reset an existing account's
        password and promote it to group 1 (the seed-admin command)."""
        with self._lock:
            existing_id = self._user_by_email.get(email.strip().lower())
            if existing_id is None:
                return self._create_user(email, "Administrator", password, group_id=1)
            user = self._users[existing_id]
            if user.group_id != 1:
                user.group_id = 1
                self._put(KIND_USER, str(user.user_id), user.to_payload())
            salt = self._random_bytes(16)
            credential = {
                "user_id": user.user_id,
                "salt": salt.hex(),
                "password_hash": self._hash_password(password, salt),
                "iterations": max(1, self.config.password_iterations),
            }
            self._put(KIND_CREDENTIAL, str(user.user_id), credential)
            self._credentials[user.user_id] = credential
            return user

    def authenticate(self, email: str, password: str) -> dict:
        """Password check; returns the new session payload."""
        with self._lock:
            user_id = self._user_by_email.get(email.strip().lower())
            if user_id is None:
                raise BadCredentials("unknown email or wrong password")
            credential = self._credentials[user_id]
            salt = bytes.fromhex(credential["salt"])
            expected = credential["password_hash"]
            actual = hashlib.pbkdf2_hmac(
                "sha256", password.encode("utf-8"), salt, credential["iterations"]
            ).hex()
            if not secrets.compare_digest(expected, actual):
                raise BadCredentials("unknown email or wrong password")
            token = self._new_token()
            expires = self._now() + timedelta(hours=self.config.session_lifetime_hours)
            session = {
                "token": token,
                "user_id": user_id,
                "expires_at": format_ts(expires),
                "revoked": False,
            }
            self._put(KIND_SESSION, token, session)
            self._sessions[token] = session
            return dict(session)

    def resolve_session(self, token: str) -> UserAccount:
        with self._lock:
            session = self._sessions.get(token)
            if session is None or session["revoked"]:
                raise SessionExpired("unknown or revoked session token")
            if parse_ts(session["expires_at"]) <= self._now():
                raise SessionExpired("session has expired")
            return self._users[session["user_id"]]

    def logout(self, token: str) -> None:
        with self._lock:
            session = self._sessions.get(token)
            if session is None or session["revoked"]:
                raise SessionExpired("unknown or revoked session token")
            session = dict(session, revoked=True)
            self._put(KIND_SESSION, token, session)
            self._sessions[token] = session

    def get_user(self, user_id: int) -> UserAccount:
        with self._lock:
            user = self._users.get(user_id)
            if user is None:
                raise UnknownUser(f"no user {user_id}")
            return user

    def user_payload(self, user: UserAccount) -> dict:
        payload = user.to_payload()
        payload["reputation_points"] = self._ledger.reputation(user.user_id)
        return payload

    def list_users(self, actor: Optional[UserAccount]) -> list[UserAccount]:
        with self._lock:
            self._require(actor, Action.MANAGE_USERS)
            return [self._users[uid] for uid in sorted(self._users)]

    def set_user_group(
        self, actor: Optional[UserAccount], user_id: int, group_id: int
    ) -> UserAccount:
        with self._lock:
            self._require(actor, Action.MANAGE_USERS)
            user = self.get_user(user_id)
            if group_id not in self._groups:
                raise UnknownGroup(f"no group {group_id}")
            user.group_id = group_id
            self._put(KIND_USER, str(user.user_id), user.to_payload())
            return user

    def groups(self) -> list[UserGroup]:
        with self._lock:
            return [self._groups[gid] for gid in sorted(self._groups)]

    # -- idea lifecycle -------------------------------------------------------

    def submit_idea(
        self,
        actor: Optional[UserAccount],
        title: str,
        body: str,
        tags: Iterable[str] = (),
        visibility: Visibility = Visibility.PRIVATE,
        draft: bool = False,
    ) -> Idea:
        """Validated entry into the moderation queue, or a Draft save when
        ``draft`` is set (drafts skip the gate until submitted)."""
        with self._lock:
            author = self._require(actor, Action.SUBMIT_IDEA)
            normalized = normalize_tags(tags)
            if not draft:
                self._validate_or_raise(author, title, body, normalized)
            now = self._now()
            idea = Idea(
                idea_id=self._next_idea_id,
                author_id=author.user_id,
                title=title,
                body=body,
                tags=normalized,
                visibility=visibility,
                state=IdeaState.DRAFT if draft else IdeaState.SUBMITTED,
                created_at=now,
                updated_at=now,
            )
            self._next_idea_id += 1
            self._put(KIND_IDEA, str(idea.idea_id), idea.to_payload())
            self._ideas[idea.idea_id] = idea
            return idea

    def _validate_or_raise(
        self, author: UserAccount, title: str, body: str, tags: set[str]
    ) -> None:
        report = validate_idea(
            title,
            body,
            sorted(tags),
            self._index,
            duplicate_threshold=self.config.duplicate_threshold,
            duplicate_visible=self._visible_published_ids(author),
        )
        if not report.valid:
            raise ValidationFailed(report)

    def validate_draft(
        self, actor: Optional[UserAccount], title: str, body: str,
        tags: Iterable[str] = (),
    ):
        """Dry-run of the validation gate (used by clients for live feedback)."""
        with self._lock:
            author = self._require(actor, Action.SUBMIT_IDEA)
            return validate_idea(
                title,
                body,
                sorted(normalize_tags(tags)),
                self._index,
                duplicate_threshold=self.config.duplicate_threshold,
                duplicate_visible=self._visible_published_ids(author),
            )

    def resubmit_idea(
        self,
        actor: Optional[UserAccount],
        idea_id: int,
        title: Optional[str] = None,
        body: Optional[str] = None,
        tags: Optional[Iterable[str]] = None,
        visibility: Optional[Visibility] = None,
        draft: bool = False,
    ) -> Idea:
        """Edit and re-enter the queue from Rejected or Draft. With ``draft``
        set the idea stays a Draft (work-in-progress save)."""
        with self._lock:
            author = self._require(actor, Action.SUBMIT_IDEA)
            idea = self._ideas.get(idea_id)
            if idea is None:
                raise UnknownIdea(f"no idea {idea_id}")
            if idea.author_id != author.user_id:
                raise PermissionDenied("only the author may revise an idea")
            if idea.state not in (IdeaState.REJECTED, IdeaState.DRAFT):
                raise InvalidState(
                    f"idea in state {idea.state.value} cannot be resubmitted"
                )
            new_title = idea.title if title is None else title
            new_body = idea.body if body is None else body
            new_tags = idea.tags if tags is None else normalize_tags(tags)
            new_visibility = idea.visibility if visibility is None else visibility
            if draft:
                if idea.state is not IdeaState.DRAFT:
                    raise InvalidState("only drafts can be saved as drafts")
            else:
                check_idea_transition(idea.state, IdeaState.SUBMITTED)
                self._validate_or_raise(author, new_title, new_body, new_tags)
                idea.state = IdeaState.SUBMITTED
                idea.rejection_reason = None
            idea.title = new_title
            idea.body = new_body
            idea.tags = new_tags
            idea.visibility = new_visibility
            idea.updated_at = self._now()
            self._put(KIND_IDEA, str(idea.idea_id), idea.to_payload())
            return idea

    def review_idea(
        self,
        actor: Optional[UserAccount],
        idea_id: int,
        outcome: ReviewOutcome,
        reason: str = "",
    ) -> ReviewDecision:
        with self._lock:
            reviewer = self._require(actor, Action.MODERATE_IDEAS)
            idea = self._ideas.get(idea_id)
            if idea is None:
                raise UnknownIdea(f"no idea {idea_id}")
            if idea.state is not IdeaState.SUBMITTED:
                raise InvalidState(
                    f"idea in state {idea.state.value} is not awaiting review"
                )
            if outcome is ReviewOutcome.REJECT and not reason.strip():
                raise MissingReason("a rejection must carry a reason")
            target = (
                IdeaState.PUBLISHED
                if outcome is ReviewOutcome.PUBLISH
                else IdeaState.REJECTED
            )
            check_idea_transition(idea.state, target)
            now = self._now()
            idea.state = target
            idea.rejection_reason = reason.strip() if target is IdeaState.REJECTED else None
            idea.updated_at = now
            self._put(KIND_IDEA, str(idea.idea_id), idea.to_payload())
            if target is IdeaState.PUBLISHED:
                self._index.index_idea(idea)
                self._award(
                    idea.author_id, PointKind.IDEA_PUBLISHED, f"idea:{idea.idea_id}"
                )
            decision = ReviewDecision(
                review_id=self._next_review_id,
                idea_id=idea_id,
                reviewer_id=reviewer.user_id,
                outcome=outcome,
                reason=reason.strip(),
                decided_at=now,
            )
            self._next_review_id += 1
            self._put(KIND_REVIEW, str(decision.review_id), decision.to_payload())
            self._reviews[decision.review_id] = decision
            return decision

    def moderation_queue(self, actor: Optional[UserAccount]) -> list[Idea]:
        with self._lock:
            self._require(actor, Action.MODERATE_IDEAS)
            queue = [
                idea for idea in self._ideas.values()
                if idea.state is IdeaState.SUBMITTED
            ]
            queue.sort(key=lambda i: (i.created_at, i.idea_id))
            return queue

    def get_idea(self, actor: Optional[UserAccount], idea_id: int) -> Idea:
        with self._lock:
            self._check_read(actor)
            return self._visible_idea(actor, idea_id)

    def set_visibility(
        self,
        actor: Optional[UserAccount],
        idea_id: int,
        visibility: Visibility,
        expected_version: Optional[int] = None,
    ) -> Idea:
        with self._lock:
            idea = self._ideas.get(idea_id)
            if idea is None:
                raise UnknownIdea(f"no idea {idea_id}")
            if not access.may_change_visibility(actor, idea):
                raise PermissionDenied(
                    "only the author or an Administrator may change visibility"
                )
            current = self.version_of(KIND_IDEA, str(idea_id))
            if expected_version is not None and expected_version != current:
                raise VersionConflict(
                    f"idea {idea_id}: expected version {expected_version}, have {current}",
                    current_version=current,
                )
            idea.visibility = visibility
            idea.updated_at = self._now()
            self._put(KIND_IDEA, str(idea.idea_id), idea.to_payload())
            return idea

    def reviews_for(self, idea_id: int) -> list[ReviewDecision]:
        with self._lock:
            decisions = [d for d in self._reviews.values() if d.idea_id == idea_id]
            decisions.sort(key=lambda d: d.review_id)
            return decisions

    # -- ratings and comments ---------------------------------------------------

    def rate_idea(
        self,
        actor: Optional[UserAccount],
        idea_id: int,
        relevance: int,
        feasibility: int,
        originality: int,
        impact: int,
    ) -> Rating:
        with self._lock:
            rater = self._require(actor, Action.RATE_IDEA)
            idea = self._ideas.get(idea_id)
            if idea is None or not self._visible(idea, rater):
                raise UnknownIdea(f"no idea {idea_id}")
            if idea.state is not IdeaState.PUBLISHED:
                raise IdeaNotPublished(f"idea {idea_id} is {idea.state.value}")
            if idea.author_id == rater.user_id:
                raise SelfRating("authors may not rate their own ideas")
            scores = (relevance, feasibility, originality, impact)
            for value in scores:
                if not isinstance(value, int) or not RATING_MIN <= value <= RATING_MAX:
                    raise ScoreOutOfRange(
                        f"scores must be integers in [{RATING_MIN},{RATING_MAX}], got {value!r}"
                    )
            rating = Rating(
                idea_id=idea_id,
                rater_id=rater.user_id,
                relevance=relevance,
                feasibility=feasibility,
                originality=originality,
                impact=impact,
                created_at=self._now(),
            )
            self._put(KIND_RATING, f"{idea_id}:{rater.user_id}", rating.to_payload())
            self._ratings[(idea_id, rater.user_id)] = rating
            self._award(
                rater.user_id, PointKind.RATING_CAST, f"rating:{idea_id}:{rater.user_id}"
            )
            return rating

    def comment_on_idea(
        self,
        actor: Optional[UserAccount],
        idea_id: int,
        body: str,
        parent_comment_id: Optional[int] = None,
    ) -> Comment:
        with self._lock:
            author = self._require(actor, Action.COMMENT_IDEA)
            idea = self._ideas.get(idea_id)
            if idea is None or not self._visible(idea, author):
                raise UnknownIdea(f"no idea {idea_id}")
            if idea.state is not IdeaState.PUBLISHED:
                raise IdeaNotPublished(f"idea {idea_id} is {idea.state.value}")
            if not 1 <= len(body) <= COMMENT_MAX_LEN:
                raise BodyLength(
                    f"comment body must be 1-{COMMENT_MAX_LEN} chars, got {len(body)}"
                )
            if parent_comment_id is not None:
                parent = self._comments.get(parent_comment_id)
                if parent is None or parent.idea_id != idea_id:
                    raise BadParent("parent comment must exist on the same idea")
                if parent.parent_comment_id is not None:
                    raise BadParent("replies to replies are not allowed (max depth 2)")
            comment = Comment(
                comment_id=self._next_comment_id,
                idea_id=idea_id,
                author_id=author.user_id,
                body=body,
                parent_comment_id=parent_comment_id,
                created_at=self._now(),
            )
            self._next_comment_id += 1
            self._put(KIND_COMMENT, str(comment.comment_id), comment.to_payload())
            self._comments[comment.comment_id] = comment
            self._award(
                author.user_id, PointKind.COMMENT_POSTED, f"comment:{comment.comment_id}"
            )
            return comment

    def comments_for(
        self, actor: Optional[UserAccount], idea_id: int
    ) -> list[Comment]:
        with self._lock:
            self._check_read(actor)
            self._visible_idea(actor, idea_id)
            comments = [c for c in self._comments.values() if c.idea_id == idea_id]
            comments.sort(key=lambda c: (c.created_at, c.comment_id))
            return comments

    def comment_count(self, idea_id: int) -> int:
        with self._lock:
            return sum(1 for c in self._comments.values() if c.idea_id == idea_id)

    # -- aggregation and ranking --------------------------------------------------

    def aggregate(self, idea_id: int) -> AggregateScore:
        with self._lock:
            if idea_id not in self._ideas:
                raise UnknownIdea(f"no idea {idea_id}")
            ratings = [r for (iid, _), r in self._ratings.items() if iid == idea_id]
            return aggregate_ratings(
                idea_id,
                ratings,
                prior_mean=self.config.rating_prior_mean,
                prior_weight=self.config.rating_prior_weight,
            )

    def rank_ideas(
        self,
        actor: Optional[UserAccount],
        tag: Optional[str] = None,
    ) -> list[tuple[Idea, AggregateScore]]:
        """Published ideas visible to the viewer, best first."""
        with self._lock:
            self._check_read(actor)
            candidates = [
                idea
                for idea in self._ideas.values()
                if idea.state is IdeaState.PUBLISHED
                and self._visible(idea, actor)
                and (tag is None or tag in idea.tags)
            ]
            ranked = [(idea, self.aggregate(idea.idea_id)) for idea in candidates]
            ranked.sort(key=lambda pair: rank_key(pair[0], pair[1]))
            return ranked

    def best_idea(
        self, actor: Optional[UserAccount]
    ) -> Optional[tuple[Idea, AggregateScore]]:
        ranked = self.rank_ideas(actor)
        return ranked[0] if ranked else None

    # -- search and recommendations --------------------------------------------------

    def search_ideas(
        self, actor: Optional[UserAccount], query: str, limit: int = 10
    ) -> list[QueryResult]:
        with self._lock:
            self._check_read(actor)
            if limit < 1:
                raise BadRequest(f"limit must be >= 1, got {limit}")
            visible = self._visible_published_ids(actor)
            results = [r for r in self._index.search(query) if r.idea_id in visible]
            return results[:limit]

    def similar_ideas(
        self, actor: Optional[UserAccount], idea_id: int, k: int = 5
    ) -> list[recommend.Suggestion]:
        with self._lock:
            self._check_read(actor)
            if k < 1:
                raise BadRequest(f"k must be >= 1, got {k}")
            idea = self._visible_idea(actor, idea_id)
            if idea.state is not IdeaState.PUBLISHED:
                raise IdeaNotPublished(f"idea {idea_id} is {idea.state.value}")
            candidates = self._visible_published_ids(actor)
            return recommend.similar_ideas(self._index, idea_id, k, candidates)

    def suggest_collaborators(
        self, actor: Optional[UserAccount], user_id: int, k: int = 5
    ) -> list[recommend.Suggestion]:
        with self._lock:
            self._check_read(actor)
            if k < 1:
                raise BadRequest(f"k must be >= 1, got {k}")
            if user_id not in self._users:
                raise UnknownUser(f"no user {user_id}")
            candidates = {
                uid
                for uid, user in self._users.items()
                if user.group_id != GROUP_GUESTS
            }
            candidates.add(user_id)
            tags = {uid: self._users[uid].interest_tags for uid in candidates}
            interactions = {uid: self._interaction_set(uid) for uid in candidates}
            return recommend.suggest_collaborators(
                user_id,
                tags,
                interactions,
                candidates,
                k,
                tag_weight=self.config.collaborator_tag_weight,
                interaction_weight=self.config.collaborator_interaction_weight,
            )

    def _interaction_set(self, user_id: int) -> set[int]:
        authored = {i.idea_id for i in self._ideas.values() if i.author_id == user_id}
        rated = {iid for (iid, rid) in self._ratings if rid == user_id}
        commented = {c.idea_id for c in self._comments.values() if c.author_id == user_id}
        return authored | rated | commented

    # -- projects and tasks ---------------------------------------------------------

    def create_project(
        self, actor: Optional[UserAccount], idea_id: int, name: str
    ) -> Project:
        with self._lock:
            owner = self._require(actor, Action.CREATE_PROJECT)
            idea = self._ideas.get(idea_id)
            if idea is None or not self._visible(idea, owner):
                raise UnknownIdea(f"no idea {idea_id}")
            if idea.state is not IdeaState.PUBLISHED:
                raise IdeaNotPublished(f"idea {idea_id} is {idea.state.value}")
            name = name.strip()
            if not 1 <= len(name) <= PROJECT_NAME_MAX_LEN:
                raise BadRequest(
                    f"project name must be 1-{PROJECT_NAME_MAX_LEN} chars"
                )
            project = Project(
                project_id=self._next_project_id,
                idea_id=idea_id,
                name=name,
                owner_id=owner.user_id,
                created_at=self._now(),
            )
            self._next_project_id += 1
            self._put(KIND_PROJECT, str(project.project_id), project.to_payload())
            self._projects[project.project_id] = project
            self._award(
                owner.user_id, PointKind.PROJECT_CREATED, f"project:{project.project_id}"
            )
            return project

    def _project_for(
        self, viewer: Optional[UserAccount], project_id: int
    ) -> Project:
        project = self._projects.get(project_id)
        if project is None:
            raise UnknownProject(f"no project {project_id}")
        idea = self._ideas.get(project.idea_id)
        if idea is None or not self._visible(idea, viewer):
            raise UnknownProject(f"no project {project_id}")
        return project

    def get_project(self, actor: Optional[UserAccount], project_id: int) -> Project:
        with self._lock:
            self._check_read(actor)
            return self._project_for(actor, project_id)

    def join_project(self, actor: Optional[UserAccount], project_id: int) -> Project:
        with self._lock:
            user = self._require(actor, Action.JOIN_PROJECT)
            project = self._project_for(user, project_id)
            if user.user_id in project.member_ids:
                raise AlreadyMember(f"user {user.user_id} is already a member")
            project.member_ids.add(user.user_id)
            self._put(KIND_PROJECT, str(project.project_id), project.to_payload())
            return project

    def leave_project(
        self, actor: Optional[UserAccount], project_id: int, user_id: int
    ) -> Project:
        """Members remove themselves; Administrators may remove anyone."""
        with self._lock:
            user = self._require(actor, Action.JOIN_PROJECT)
            project = self._project_for(user, project_id)
            if user.user_id != user_id and user.group_id != 1:
                raise PermissionDenied("members may only remove themselves")
            if user_id not in project.member_ids:
                raise NotMember(f"user {user_id} is not a member")
            if user_id == project.owner_id:
                raise OwnerMustTransfer(
                    "the owner cannot leave; ownership transfer is not supported"
                )
            project.member_ids.discard(user_id)
            self._put(KIND_PROJECT, str(project.project_id), project.to_payload())
            now = self._now()
            for task in self._tasks.values():
                if task.project_id == project_id and task.assignee_id == user_id:
                    task.assignee_id = None
                    task.updated_at = now
                    self._put(KIND_TASK, task.task_id, task.to_payload())
            return project

    def upsert_task(
        self,
        actor: Optional[UserAccount],
        task_id: str,
        project_id: int,
        title: Optional[str] = None,
        assignee_id: Optional[int] = None,
        deadline: Optional[datetime] = None,
        status: Optional[TaskStatus] = None,
        expected_version: Optional[int] = None,
    ) -> Task:
        """Create or update a task (client-chosen id, PUT semantics). New
        tasks start Open; a requested status is applied as a transition."""
        with self._lock:
            member = self._require(actor, Action.JOIN_PROJECT)
            project = self._project_for(member, project_id)
            if member.user_id not in project.member_ids:
                raise PermissionDenied("only project members may manage tasks")
            if not _TASK_ID_RE.match(task_id):
                raise BadRequest(
                    "task id must be 1-64 chars of letters, digits, '-' or '_'"
                )
            current = self.version_of(KIND_TASK, task_id)
            if expected_version is not None and expected_version != current:
                raise VersionConflict(
                    f"task {task_id}: expected version {expected_version}, have {current}",
                    current_version=current,
                )
            existing = self._tasks.get(task_id)
            if existing is not None and existing.project_id != project_id:
                raise BadRequest(f"task {task_id} belongs to another project")
            if assignee_id is not None and assignee_id not in project.member_ids:
                raise AssigneeNotMember(
                    f"user {assignee_id} is not a member of project {project_id}"
                )
            now = self._now()
            previous_status = existing.status if existing else TaskStatus.OPEN
            new_status = status if status is not None else previous_status
            check_task_transition(previous_status, new_status)
            if existing is None:
                if title is None or not title.strip():
                    raise BadRequest("a new task needs a title")
                task = Task(
                    task_id=task_id,
                    project_id=project_id,
                    title=title.strip(),
                    assignee_id=assignee_id,
                    deadline=deadline,
                    status=new_status,
                    created_at=now,
                    updated_at=now,
                )
                self._tasks[task_id] = task
            else:
                task = existing
                if title is not None:
                    if not title.strip():
                        raise BadRequest("task title cannot be blank")
                    task.title = title.strip()
                task.assignee_id = assignee_id
                task.deadline = deadline
                task.status = new_status
                task.updated_at = now
            self._put(KIND_TASK, task.task_id, task.to_payload())
            if new_status is TaskStatus.DONE and previous_status is not TaskStatus.DONE:
                beneficiary = task.assignee_id if task.assignee_id is not None else member.user_id
                self._award(beneficiary, PointKind.TASK_DONE, f"task:{task.task_id}")
            return task

    def get_task(self, actor: Optional[UserAccount], task_id: str) -> Task:
        with self._lock:
            self._check_read(actor)
            task = self._tasks.get(task_id)
            if task is None:
                raise UnknownTask(f"no task {task_id}")
            self._project_for(actor, task.project_id)
            return task

    def project_tasks(
        self, actor: Optional[UserAccount], project_id: int
    ) -> list[Task]:
        with self._lock:
            self._check_read(actor)
            self._project_for(actor, project_id)
            tasks = [t for t in self._tasks.values() if t.project_id == project_id]
            tasks.sort(key=lambda t: t.task_id)
            return tasks

    def project_progress(
        self, actor: Optional[UserAccount], project_id: int
    ) -> float:
        with self._lock:
            self._check_read(actor)
            self._project_for(actor, project_id)
            return project_progress(
                t for t in self._tasks.values() if t.project_id == project_id
            )

    # -- incentives ----------------------------------------------------------------

    _SOURCE_CHECKS = {
        "idea": lambda self, ref: int(ref) in self._ideas,
        "comment": lambda self, ref: int(ref) in self._comments,
        "project": lambda self, ref: int(ref) in self._projects,
        "task": lambda self, ref: ref in self._tasks,
        "rating": lambda self, ref: tuple(map(int, ref.split(":"))) in self._ratings,
    }

    def award(self, user_id: int, kind: PointKind, source_ref: str) -> PointsEvent:
        """Idempotent on (kind, source_ref): re-awarding returns the original
        event untouched."""
        with self._lock:
            return self._award(user_id, kind, source_ref)

    def _award(self, user_id: int, kind: PointKind, source_ref: str) -> PointsEvent:
        if user_id not in self._users:
            raise UnknownUser(f"no user {user_id}")
        prefix, _, ref = source_ref.partition(":")
        checker = self._SOURCE_CHECKS.get(prefix)
        try:
            source_ok = checker is not None and checker(self, ref)
        except (ValueError, TypeError):
            source_ok = False
        if not source_ok:
            raise UnknownSource(f"source {source_ref!r} does not exist")
        existing = self._ledger.existing(kind, source_ref)
        if existing is not None:
            return existing
        event = PointsEvent(
            event_id=self._next_event_id,
            user_id=user_id,
            kind=kind,
            points=self.config.points_for(kind),
            source_ref=source_ref,
            created_at=self._now(),
        )
        self._next_event_id += 1
        self._put(KIND_POINTS_EVENT, str(event.event_id), event.to_payload())
        self._ledger.record(event)
        return event

    def reputation(self, user_id: int) -> int:
        with self._lock:
            return self._ledger.reputation(user_id)

    def ledger_events(self) -> list[PointsEvent]:
        with self._lock:
            return self._ledger.events()

    def leaderboard(self, n: int = 10) -> list[tuple[UserAccount, int]]:
        """Top-n users by reputation; Guests are excluded."""
        with self._lock:
            if n < 1:
                raise BadRequest(f"n must be >= 1, got {n}")
            rows = [
                (user, self._ledger.reputation(user.user_id))
                for user in self._users.values()
                if user.group_id != GROUP_GUESTS
            ]
            rows.sort(key=lambda row: (-row[1], row[0].created_at, row[0].user_id))
            return rows[:n]

    # -- introspection / maintenance --------------------------------------------------

    @property
    def index(self) -> SearchIndex:
        return self._index

    def ideas(self) -> list[Idea]:
        with self._lock:
            return [self._ideas[i] for i in sorted(self._ideas)]

    def export_lines(self) -> Iterator[str]:
        return self.store.export_lines()
