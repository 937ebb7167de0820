"""Runtime configuration: tunable constants in one place.

Resolution order for the CLI is flags > environment > config file > the
defaults below.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .errors import BadRequest
from .feedback import SMOOTHING_PRIOR_MEAN, SMOOTHING_PRIOR_WEIGHT
from .incentives import POINT_VALUES, PointKind
from .lifecycle import DUPLICATE_THRESHOLD
from .recommend import INTERACTION_WEIGHT, TAG_WEIGHT
from .search import BM25_B, BM25_K1, DEFAULT_FIELD_BOOSTS, Field

ENV_PORT = "IDEAFORGE_PORT"
ENV_DATA_DIR = "IDEAFORGE_DATA_DIR"


@dataclass
class PlatformConfig:
    port: int = 8080
    data_dir: Optional[str] = None
    session_lifetime_hours: float = 24.0
    duplicate_threshold: float = DUPLICATE_THRESHOLD
    bm25_k1: float = BM25_K1
    bm25_b: float = BM25_B
    boost_title: float = DEFAULT_FIELD_BOOSTS[Field.TITLE]
    boost_tag: float = DEFAULT_FIELD_BOOSTS[Field.TAG]
    boost_body: float = DEFAULT_FIELD_BOOSTS[Field.BODY]
    rating_prior_mean: float = SMOOTHING_PRIOR_MEAN
    rating_prior_weight: float = SMOOTHING_PRIOR_WEIGHT
    collaborator_tag_weight: float = TAG_WEIGHT
    collaborator_interaction_weight: float = INTERACTION_WEIGHT
    # PBKDF2-HMAC-SHA256 rounds; lowered in tests, never below 1.
    password_iterations: int = 60_000
    min_password_length: int = 8
    bootstrap_admin_email: str = "admin@ideaforge.local"
    # When unset, serve generates one on first run and logs it once.
    bootstrap_admin_password: Optional[str] = None
    point_values: dict[str, int] = field(
        default_factory=lambda: {k.value: v for k, v in POINT_VALUES.items()}
    )
    # Directory of static UI assets served under /app (optional).
    ui_dir: Optional[str] = None

    def field_boosts(self) -> dict[Field, float]:
        return {
            Field.TITLE: self.boost_title,
            Field.TAG: self.boost_tag,
            Field.BODY: self.boost_body,
        }

    def points_for(self, kind: PointKind) -> int:
        return self.point_values[kind.value]

    @classmethod
    def from_file(cls, path: str | Path) -> "PlatformConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise BadRequest(f"cannot read config file {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise BadRequest(f"config file {path} must hold a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise BadRequest(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)
