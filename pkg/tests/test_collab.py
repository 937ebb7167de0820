from __future__ import annotations

import random

import pytest

from ideaforge.collab import TaskStatus, check_task_transition, project_progress
from ideaforge.errors import (
    AlreadyMember,
    AssigneeNotMember,
    BadRequest,
    IdeaNotPublished,
    IllegalTransition,
    NotMember,
    OwnerMustTransfer,
    PermissionDenied,
    UnknownProject,
)
from ideaforge.model import Visibility

from conftest import make_population, publish_idea

BODY = "A body that is long enough to pass validation."


@pytest.fixture
def setup(pop):
    idea = publish_idea(pop, pop.visitor, "Team-worthy idea", BODY)
    project = pop.platform.create_project(pop.visitor, idea.idea_id, "Build it")
    return pop, idea, project


class TestTaskTransitions:
    def test_table(self):
        check_task_transition(TaskStatus.OPEN, TaskStatus.IN_PROGRESS)
        check_task_transition(TaskStatus.IN_PROGRESS, TaskStatus.DONE)
        check_task_transition(TaskStatus.DONE, TaskStatus.IN_PROGRESS)
        for src in TaskStatus:
            check_task_transition(src, src)  # same-status writes are no-ops
        for src, dst in [
            (TaskStatus.OPEN, TaskStatus.DONE),
            (TaskStatus.DONE, TaskStatus.OPEN),
            (TaskStatus.IN_PROGRESS, TaskStatus.OPEN),
        ]:
            with pytest.raises(IllegalTransition):
                check_task_transition(src, dst)


class TestProjects:
    def test_create_with_owner_as_sole_member(self, setup):
        _, idea, project = setup
        assert project.member_ids == {project.owner_id}
        assert project.idea_id == idea.idea_id

    def test_guest_cannot_create(self, pop):
        idea = publish_idea(pop, pop.visitor, "Open idea", BODY)
        with pytest.raises(PermissionDenied):
            pop.platform.create_project(pop.guest_user, idea.idea_id, "Nope")
        with pytest.raises(PermissionDenied):
            pop.platform.create_project(None, idea.idea_id, "Nope")

    def test_submitted_idea_cannot_host_project(self, pop):
        idea = pop.platform.submit_idea(pop.visitor, "Not yet published", BODY, [])
        with pytest.raises(IdeaNotPublished):
            pop.platform.create_project(pop.visitor, idea.idea_id, "Too soon")

    def test_join_and_leave(self, setup):
        pop, _, project = setup
        joined = pop.platform.join_project(pop.visitor2, project.project_id)
        assert joined.member_ids == {pop.visitor.user_id, pop.visitor2.user_id}
        with pytest.raises(AlreadyMember):
            pop.platform.join_project(pop.visitor2, project.project_id)
        left = pop.platform.leave_project(
            pop.visitor2, project.project_id, pop.visitor2.user_id
        )
        assert left.member_ids == {pop.visitor.user_id}

    def test_leaving_clears_assignments(self, setup):
        pop, _, project = setup
        pop.platform.join_project(pop.visitor2, project.project_id)
        for i in range(3):
            pop.platform.upsert_task(
                pop.visitor, f"t{i}", project.project_id,
                title=f"Task {i}", assignee_id=pop.visitor2.user_id,
            )
        pop.platform.leave_project(
            pop.visitor2, project.project_id, pop.visitor2.user_id
        )
        for task in pop.platform.project_tasks(pop.visitor, project.project_id):
            assert task.assignee_id is None

    def test_owner_cannot_leave_with_members_present(self, setup):
        pop, _, project = setup
        pop.platform.join_project(pop.visitor2, project.project_id)
        with pytest.raises(OwnerMustTransfer):
            pop.platform.leave_project(
                pop.visitor, project.project_id, pop.visitor.user_id
            )

    def test_non_member_cannot_be_removed_by_stranger(self, setup):
        pop, _, project = setup
        with pytest.raises(PermissionDenied):
            pop.platform.leave_project(
                pop.visitor2, project.project_id, pop.visitor.user_id
            )
        pop.platform.join_project(pop.visitor2, project.project_id)
        with pytest.raises(NotMember):
            pop.platform.leave_project(
                pop.editor, project.project_id, pop.editor.user_id
            )

    def test_team_visibility_gates_joining(self, pop):
        idea = publish_idea(
            pop, pop.visitor, "Members only", BODY, visibility=Visibility.TEAM
        )
        project = pop.platform.create_project(pop.visitor, idea.idea_id, "Closed")
        with pytest.raises(UnknownProject):
            pop.platform.join_project(pop.visitor2, project.project_id)


class TestTasks:
    def test_upsert_requires_membership(self, setup):
        pop, _, project = setup
        with pytest.raises(PermissionDenied):
            pop.platform.upsert_task(
                pop.visitor2, "t1", project.project_id, title="Not yours"
            )

    def test_assignee_must_be_member(self, setup):
        pop, _, project = setup
        with pytest.raises(AssigneeNotMember):
            pop.platform.upsert_task(
                pop.visitor, "t1", project.project_id,
                title="Task", assignee_id=pop.visitor2.user_id,
            )

    def test_new_task_cannot_start_done(self, setup):
        pop, _, project = setup
        with pytest.raises(IllegalTransition):
            pop.platform.upsert_task(
                pop.visitor, "t1", project.project_id,
                title="Skip ahead", status=TaskStatus.DONE,
            )

    def test_full_status_cycle(self, setup):
        pop, _, project = setup
        pop.platform.upsert_task(pop.visitor, "t1", project.project_id, title="Cycle")
        pop.platform.upsert_task(
            pop.visitor, "t1", project.project_id, status=TaskStatus.IN_PROGRESS
        )
        done = pop.platform.upsert_task(
            pop.visitor, "t1", project.project_id, status=TaskStatus.DONE
        )
        assert done.status is TaskStatus.DONE
        reopened = pop.platform.upsert_task(
            pop.visitor, "t1", project.project_id, status=TaskStatus.IN_PROGRESS
        )
        assert reopened.status is TaskStatus.IN_PROGRESS
        with pytest.raises(IllegalTransition):
            pop.platform.upsert_task(
                pop.visitor, "t1", project.project_id, status=TaskStatus.OPEN
            )

    def test_task_id_validation(self, setup):
        pop, _, project = setup
        with pytest.raises(BadRequest):
            pop.platform.upsert_task(
                pop.visitor, "bad id!", project.project_id, title="x"
            )

    def test_updated_at_refreshes(self, setup):
        pop, _, project = setup
        task = pop.platform.upsert_task(
            pop.visitor, "t1", project.project_id, title="Timed"
        )
        later = pop.platform.upsert_task(
            pop.visitor, "t1", project.project_id, status=TaskStatus.IN_PROGRESS
        )
        assert later.updated_at > task.created_at


class TestProgress:
    def test_empty_project_is_zero(self, setup):
        pop, _, project = setup
        assert pop.platform.project_progress(pop.visitor, project.project_id) == 0.0

    def test_two_of_four_done_is_half(self, setup):
        pop, _, project = setup
        for i in range(4):
            pop.platform.upsert_task(
                pop.visitor, f"t{i}", project.project_id, title=f"Task {i}"
            )
        for i in range(2):
            pop.platform.upsert_task(
                pop.visitor, f"t{i}", project.project_id,
                status=TaskStatus.IN_PROGRESS,
            )
            pop.platform.upsert_task(
                pop.visitor, f"t{i}", project.project_id, status=TaskStatus.DONE
            )
        assert pop.platform.project_progress(pop.visitor, project.project_id) == 0.5

    def test_random_task_sets_match_recount_oracle(self, setup):
        pop, _, project = setup
        rng = random.Random(21)
        statuses = []
        for i in range(12):
            pop.platform.upsert_task(
                pop.visitor, f"t{i}", project.project_id, title=f"Task {i}"
            )
            target = rng.choice(["open", "in_progress", "done"])
            if target != "open":
                pop.platform.upsert_task(
                    pop.visitor, f"t{i}", project.project_id,
                    status=TaskStatus.IN_PROGRESS,
                )
            if target == "done":
                pop.platform.upsert_task(
                    pop.visitor, f"t{i}", project.project_id, status=TaskStatus.DONE
                )
            statuses.append(target)
        expected = statuses.count("done") / len(statuses)
        assert pop.platform.project_progress(
            pop.visitor, project.project_id
        ) == pytest.approx(expected)

    def test_progress_monotone_under_marking_done(self, setup):
        pop, _, project = setup
        for i in range(5):
            pop.platform.upsert_task(
                pop.visitor, f"t{i}", project.project_id, title=f"Task {i}"
            )
            pop.platform.upsert_task(
                pop.visitor, f"t{i}", project.project_id,
                status=TaskStatus.IN_PROGRESS,
            )
        last = 0.0
        for i in range(5):
            pop.platform.upsert_task(
                pop.visitor, f"t{i}", project.project_id, status=TaskStatus.DONE
            )
            now = pop.platform.project_progress(pop.visitor, project.project_id)
            assert now >= last
            last = now

    def test_assignee_integrity_invariant(self, setup):
        pop, _, project = setup
        pop.platform.join_project(pop.visitor2, project.project_id)
        pop.platform.upsert_task(
            pop.visitor, "t1", project.project_id, title="Owned",
            assignee_id=pop.visitor2.user_id,
        )
        pop.platform.leave_project(
            pop.visitor2, project.project_id, pop.visitor2.user_id
        )
        refreshed = pop.platform.get_project(pop.visitor, project.project_id)
        for task in pop.platform.project_tasks(pop.visitor, project.project_id):
            assert task.assignee_id is None or task.assignee_id in refreshed.member_ids


class TestPureProgress:
    def test_empty_list(self):
        assert project_progress([]) == 0.0
