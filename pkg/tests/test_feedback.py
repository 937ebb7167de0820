from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from ideaforge.feedback import aggregate_ratings, rank_key
from ideaforge.model import Idea, IdeaState, Rating

from oracles import smoothed_score_from_raw


def rating(rater_id: int, r: int, f: int, o: int, i: int) -> Rating:
    return Rating(1, rater_id, r, f, o, i)


class TestSmoothing:
    def test_no_ratings_is_exactly_the_prior(self):
        agg = aggregate_ratings(1, [])
        assert agg.smoothed_score == 3.0
        assert agg.rating_count == 0
        assert agg.per_criterion_mean == {
            "relevance": 3.0, "feasibility": 3.0, "originality": 3.0, "impact": 3.0,
        }

    def test_single_perfect_rating(self):
        # (5*3 + 5) / (5+1), frozen from the brute-force oracle
        agg = aggregate_ratings(1, [rating(2, 5, 5, 5, 5)])
        assert agg.smoothed_score == pytest.approx(3.3333333333333335, abs=0)
        assert agg.smoothed_score == smoothed_score_from_raw([(5, 5, 5, 5)])

    def test_two_raters_means_four_and_two(self):
        # (15 + 6) / 7 == 3.0, frozen from the oracle
        ratings = [rating(2, 4, 4, 4, 4), rating(3, 2, 2, 2, 2)]
        agg = aggregate_ratings(1, ratings)
        assert agg.smoothed_score == pytest.approx(3.0, abs=0)
        assert agg.smoothed_score == smoothed_score_from_raw(
            [(4, 4, 4, 4), (2, 2, 2, 2)]
        )

    def test_thousand_perfect_ratings_approach_five(self):
        # (15 + 5000) / 1005, frozen from the oracle
        ratings = [rating(i, 5, 5, 5, 5) for i in range(2, 1002)]
        agg = aggregate_ratings(1, ratings)
        assert agg.smoothed_score == pytest.approx(4.990049751243781, abs=0)
        assert agg.smoothed_score == smoothed_score_from_raw([(5, 5, 5, 5)] * 1000)

    def test_mixed_criteria_match_raw_sum_oracle(self):
        rows = [(5, 3, 4, 2), (1, 1, 2, 5), (3, 3, 3, 3)]
        ratings = [rating(i + 2, *row) for i, row in enumerate(rows)]
        agg = aggregate_ratings(1, ratings)
        assert agg.smoothed_score == pytest.approx(
            smoothed_score_from_raw(rows), abs=1e-15
        )

    def test_per_criterion_means(self):
        ratings = [rating(2, 5, 3, 4, 2), rating(3, 1, 1, 2, 4)]
        agg = aggregate_ratings(1, ratings)
        assert agg.per_criterion_mean == {
            "relevance": 3.0, "feasibility": 2.0, "originality": 3.0, "impact": 3.0,
        }

    def test_payload_rounds_to_three_decimals(self):
        agg = aggregate_ratings(1, [rating(2, 5, 5, 5, 5)])
        payload = agg.to_payload()
        assert payload["smoothed_score"] == 3.333
        assert payload["rating_count"] == 1


_score_rows = st.lists(
    st.tuples(*[st.integers(min_value=1, max_value=5)] * 4), max_size=30
)


class TestSmoothingProperties:
    @given(_score_rows)
    def test_bounds(self, rows):
        ratings = [rating(i + 2, *row) for i, row in enumerate(rows)]
        agg = aggregate_ratings(1, ratings)
        assert 1.0 <= agg.smoothed_score <= 5.0
        means = [sum(row) / 4 for row in rows] + [3.0]
        assert min(means) - 1e-12 <= agg.smoothed_score <= max(means) + 1e-12

    @given(_score_rows, st.tuples(*[st.integers(min_value=1, max_value=5)] * 4))
    def test_adding_above_average_rating_increases_score(self, rows, new_row):
        ratings = [rating(i + 2, *row) for i, row in enumerate(rows)]
        before = aggregate_ratings(1, ratings).smoothed_score
        if sum(new_row) / 4 > before:
            ratings.append(rating(len(rows) + 2, *new_row))
            after = aggregate_ratings(1, ratings).smoothed_score
            assert after > before

    @given(_score_rows)
    def test_matches_raw_sum_oracle(self, rows):
        ratings = [rating(i + 2, *row) for i, row in enumerate(rows)]
        agg = aggregate_ratings(1, ratings)
        assert agg.smoothed_score == pytest.approx(
            smoothed_score_from_raw(rows), abs=1e-12
        )


class TestRankKey:
    def test_orders_by_score_then_age_then_id(self):
        t0 = datetime(2026, 1, 1, tzinfo=timezone.utc)
        ideas = [
            Idea(1, 1, "Older low", "b" * 20, created_at=t0, state=IdeaState.PUBLISHED),
            Idea(2, 1, "Newer high", "b" * 20, created_at=t0 + timedelta(1),
                 state=IdeaState.PUBLISHED),
            Idea(3, 1, "Tie with 1", "b" * 20, created_at=t0, state=IdeaState.PUBLISHED),
        ]
        aggs = {
            1: aggregate_ratings(1, []),
            2: aggregate_ratings(2, [rating(9, 5, 5, 5, 5)]),
            3: aggregate_ratings(3, []),
        }
        ordered = sorted(ideas, key=lambda i: rank_key(i, aggs[i.idea_id]))
        assert [i.idea_id for i in ordered] == [2, 1, 3]

    def test_random_rankings_match_bruteforce_sort(self):
        rng = random.Random(5)
        t0 = datetime(2026, 1, 1, tzinfo=timezone.utc)
        for _ in range(50):
            rows = []
            for idea_id in range(1, rng.randint(2, 20)):
                created = t0 + timedelta(seconds=rng.randint(0, 5))
                idea = Idea(idea_id, 1, "T" * 5, "b" * 20, created_at=created,
                            state=IdeaState.PUBLISHED)
                n = rng.randint(0, 4)
                ratings = [
                    rating(100 + k, *[rng.randint(1, 5) for _ in range(4)])
                    for k in range(n)
                ]
                rows.append((idea, aggregate_ratings(idea_id, ratings)))
            ordered = sorted(rows, key=lambda p: rank_key(p[0], p[1]))
            # brute-force oracle: explicit lexicographic comparison
            expected = sorted(
                rows,
                key=lambda p: (-p[1].smoothed_score, p[0].created_at, p[0].idea_id),
            )
            assert [p[0].idea_id for p in ordered] == [p[0].idea_id for p in expected]
