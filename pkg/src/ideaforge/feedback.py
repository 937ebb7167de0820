"""Rating aggregation: four criteria per rater, Bayesian-smoothed total.

A rater's contribution is the mean of their four criterion scores; the
aggregate pulls low-sample ideas toward the prior mean so one enthusiastic
rating cannot dominate the ranking.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Iterable

from .model import Idea, Rating

# Smoothing constants: prior mean sits at the scale midpoint, weighted as
# five virtual ratings. Overridable through PlatformConfig.
SMOOTHING_PRIOR_MEAN = 3.0
SMOOTHING_PRIOR_WEIGHT = 5.0


@dataclass(frozen=True)
class AggregateScore:
    idea_id: int
    rating_count: int
    per_criterion_mean: dict[str, float]
    smoothed_score: float

    def to_payload(self) -> dict:
        return {
            "idea_id": self.idea_id,
            "rating_count": self.rating_count,
            "per_criterion_mean": {
                name: round(value, 3)
                for name, value in self.per_criterion_mean.items()
            },
            "smoothed_score": round(self.smoothed_score, 3),
        }


def aggregate_ratings(
    idea_id: int,
    ratings: Iterable[Rating],
    prior_mean: float = SMOOTHING_PRIOR_MEAN,
    prior_weight: float = SMOOTHING_PRIOR_WEIGHT,
) -> AggregateScore:
    """smoothed = (C*m + sum of rater means) / (C + n); equals m when n=0.

    Criterion means fall back to the prior mean when there are no ratings.
    """
    ratings = list(ratings)
    count = len(ratings)
    if count == 0:
        per_criterion = {name: prior_mean for name in Rating.CRITERIA}
        return AggregateScore(idea_id, 0, per_criterion, prior_mean)
    per_criterion = {
        name: sum(getattr(r, name) for r in ratings) / count
        for name in Rating.CRITERIA
    }
    mean_sum = sum(r.rater_mean() for r in ratings)
    smoothed = (prior_weight * prior_mean + mean_sum) / (prior_weight + count)
    return AggregateScore(idea_id, count, per_criterion, smoothed)


def rank_key(idea: Idea, score: AggregateScore) -> tuple[float, datetime, int]:
    """Total order for ranking: score desc, then older idea, then lower id."""
    return (-score.smoothed_score, idea.created_at, idea.idea_id)
