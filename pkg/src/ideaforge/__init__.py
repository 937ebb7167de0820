"""ideaforge: a self-hostable collaborative idea-management service.

Ideas move through a moderated lifecycle (draft, submitted, published,
rejected); published ideas collect four-criterion ratings and threaded
comments, feed a BM25 search index with TF-IDF near-duplicate detection,
and drive content-based recommendations. Five fixed user groups govern
every operation, and contributions earn points on an append-only ledger.
"""
from .access import Action, Decision, can, visible_to
from .collab import Project, Task, TaskStatus, project_progress
from .config import PlatformConfig
from .feedback import AggregateScore, aggregate_ratings
from .incentives import POINT_VALUES, PointKind, PointsEvent, PointsLedger
from .lifecycle import (
    ReviewDecision,
    ReviewOutcome,
    ValidationReport,
    validate_idea,
)
from .model import (
    Comment,
    Idea,
    IdeaState,
    Rating,
    UserAccount,
    UserGroup,
    Visibility,
    normalize_tag,
    seed_default_groups,
)
from .platform import Platform
from .recommend import Suggestion, jaccard, similar_ideas, suggest_collaborators
from .search import QueryResult, SearchIndex, cosine, tokenize
from .store import Store, canonical_json

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AggregateScore",
    "Comment",
    "Decision",
    "Idea",
    "IdeaState",
    "POINT_VALUES",
    "Platform",
    "PlatformConfig",
    "PointKind",
    "PointsEvent",
    "PointsLedger",
    "Project",
    "QueryResult",
    "Rating",
    "ReviewDecision",
    "ReviewOutcome",
    "SearchIndex",
    "Store",
    "Suggestion",
    "Task",
    "TaskStatus",
    "UserAccount",
    "UserGroup",
    "ValidationReport",
    "Visibility",
    "aggregate_ratings",
    "can",
    "canonical_json",
    "cosine",
    "jaccard",
    "normalize_tag",
    "project_progress",
    "seed_default_groups",
    "similar_ideas",
    "suggest_collaborators",
    "tokenize",
    "validate_idea",
    "visible_to",
]
