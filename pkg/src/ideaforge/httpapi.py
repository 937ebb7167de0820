"""HTTP/JSON surface over the platform.

Routing, session resolution, and status-code mapping live here; all domain
logic stays in ``platform``. Every endpoint maps to exactly one
access-control action (see docs/api.md for the full table and payload
shapes).

Status conventions: 400 malformed request, 401 missing/expired session
where one is required, 403 permission denied, 404 unknown or invisible
entity, 409 state/version conflicts, 422 domain validation failures (with
the full validation report for idea submissions).
"""
from __future__ import annotations

import json
import logging
import mimetypes
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Callable, Optional
from urllib.parse import parse_qs, urlsplit

from . import access
from .access import Action
from .collab import TaskStatus
from .errors import (
    BadRequest,
    BindFailure,
    IdeaForgeError,
    PermissionDenied,
    SessionExpired,
    SessionRequired,
)
from .lifecycle import ReviewOutcome
from .model import UserAccount, Visibility, parse_ts
from .platform import KIND_IDEA, KIND_TASK, Platform

logger = logging.getLogger("ideaforge.http")

API_PREFIX = "/api/v1"


class _Request:
    def __init__(
        self,
        platform: Platform,
        user: Optional[UserAccount],
        bad_token: bool,
        token: Optional[str],
        params: dict[str, str],
        query: dict[str, list[str]],
        body: Optional[dict],
    ) -> None:
        self.platform = platform
        self.user = user
        self.bad_token = bad_token
        self.token = token
        self.params = params
        self.query = query
        self.body = body

    # -- body/query helpers ------------------------------------------------

    def field(self, name: str, kind: type, required: bool = True, default=None):
        body = self.body if isinstance(self.body, dict) else {}
        if name not in body or body[name] is None:
            if required:
                raise BadRequest(f"missing field {name!r}")
            return default
        value = body[name]
        if kind is int and isinstance(value, bool):
            raise BadRequest(f"field {name!r} must be an integer")
        if not isinstance(value, kind):
            raise BadRequest(f"field {name!r} must be {kind.__name__}")
        return value

    def int_param(self, name: str) -> int:
        return int(self.params[name])

    def query_int(self, name: str, default: int) -> int:
        values = self.query.get(name)
        if not values:
            return default
        try:
            return int(values[0])
        except ValueError:
            raise BadRequest(f"query parameter {name!r} must be an integer")

    def query_str(self, name: str, default: str = "") -> str:
        values = self.query.get(name)
        return values[0] if values else default

    def visibility_field(self, name: str = "visibility", required: bool = False,
                         default: Visibility = Visibility.PRIVATE) -> Visibility:
        raw = self.field(name, str, required=required,
                         default=default.value if default else None)
        if raw is None:
            return default
        try:
            return Visibility(raw)
        except ValueError:
            raise BadRequest(
                f"{name} must be one of 'private', 'team', 'public'; got {raw!r}"
            )


Handler = Callable[[_Request], tuple]


class Route:
    def __init__(self, method: str, pattern: str, action: Action, handler: Handler):
        self.method = method
        self.regex = re.compile("^" + pattern + "$")
        self.action = action
        self.handler = handler


def _idea_detail(platform: Platform, user, idea) -> dict:
    return {
        "idea": idea.to_payload(),
        "score": platform.aggregate(idea.idea_id).to_payload(),
        "comment_count": platform.comment_count(idea.idea_id),
        "version": platform.version_of(KIND_IDEA, str(idea.idea_id)),
    }


# -- handlers -----------------------------------------------------------------


def _post_session(req: _Request):
    email = req.field("email", str)
    password = req.field("password", str)
    session = req.platform.authenticate(email, password)
    return 200, {
        "token": session["token"],
        "user_id": session["user_id"],
        "expires_at": session["expires_at"],
    }


def _delete_session(req: _Request):
    if req.token is None:
        raise SessionRequired("sign-out requires a session token")
    req.platform.logout(req.token)
    return 204, None


def _post_user(req: _Request):
    tags = req.field("interest_tags", list, required=False, default=[])
    if not all(isinstance(t, str) for t in tags):
        raise BadRequest("interest_tags must be a list of strings")
    user = req.platform.register_user(
        email=req.field("email", str),
        display_name=req.field("display_name", str),
        password=req.field("password", str),
        interest_tags=tags,
    )
    return 201, req.platform.user_payload(user)


def _get_user(req: _Request):
    user = req.platform.get_user(req.int_param("user_id"))
    return 200, req.platform.user_payload(user)


def _get_collaborators(req: _Request):
    suggestions = req.platform.suggest_collaborators(
        req.user, req.int_param("user_id"), k=req.query_int("k", 5)
    )
    return 200, {"suggestions": [s.to_payload() for s in suggestions]}


def _post_idea(req: _Request):
    tags = req.field("tags", list, required=False, default=[])
    if not all(isinstance(t, str) for t in tags):
        raise BadRequest("tags must be a list of strings")
    idea = req.platform.submit_idea(
        req.user,
        title=req.field("title", str),
        body=req.field("body", str),
        tags=tags,
        visibility=req.visibility_field(),
        draft=bool(req.field("draft", bool, required=False, default=False)),
    )
    return 201, _idea_detail(req.platform, req.user, idea)


def _get_idea(req: _Request):
    idea = req.platform.get_idea(req.user, req.int_param("idea_id"))
    return 200, _idea_detail(req.platform, req.user, idea)


def _post_resubmit(req: _Request):
    tags = req.field("tags", list, required=False, default=None)
    if tags is not None and not all(isinstance(t, str) for t in tags):
        raise BadRequest("tags must be a list of strings")
    visibility = None
    if isinstance(req.body, dict) and req.body.get("visibility") is not None:
        visibility = req.visibility_field(required=True)
    idea = req.platform.resubmit_idea(
        req.user,
        req.int_param("idea_id"),
        title=req.field("title", str, required=False, default=None),
        body=req.field("body", str, required=False, default=None),
        tags=tags,
        visibility=visibility,
        draft=bool(req.field("draft", bool, required=False, default=False)),
    )
    return 200, _idea_detail(req.platform, req.user, idea)


def _patch_visibility(req: _Request):
    idea = req.platform.set_visibility(
        req.user,
        req.int_param("idea_id"),
        req.visibility_field(required=True),
        expected_version=req.field("expected_version", int, required=False,
                                   default=None),
    )
    return 200, _idea_detail(req.platform, req.user, idea)


def _search(req: _Request):
    results = req.platform.search_ideas(
        req.user, req.query_str("q"), limit=req.query_int("limit", 10)
    )
    payload = []
    for result in results:
        idea = req.platform.get_idea(req.user, result.idea_id)
        payload.append(
            {
                "idea_id": result.idea_id,
                "score": round(result.score, 6),
                "matched_terms": sorted(result.matched_terms),
                "title": idea.title,
            }
        )
    return 200, {"results": payload}


def _best_idea(req: _Request):
    best = req.platform.best_idea(req.user)
    if best is None:
        return 204, None
    idea, score = best
    return 200, {
        "idea_id": idea.idea_id,
        "title": idea.title,
        "score": score.to_payload(),
    }


def _similar(req: _Request):
    suggestions = req.platform.similar_ideas(
        req.user, req.int_param("idea_id"), k=req.query_int("k", 5)
    )
    return 200, {"suggestions": [s.to_payload() for s in suggestions]}


def _moderation_queue(req: _Request):
    queue = req.platform.moderation_queue(req.user)
    return 200, {"queue": [idea.to_payload() for idea in queue]}


def _post_review(req: _Request):
    raw_outcome = req.field("outcome", str)
    try:
        outcome = ReviewOutcome(raw_outcome)
    except ValueError:
        raise BadRequest(f"outcome must be 'publish' or 'reject', got {raw_outcome!r}")
    decision = req.platform.review_idea(
        req.user,
        req.int_param("idea_id"),
        outcome,
        reason=req.field("reason", str, required=False, default=""),
    )
    return 200, decision.to_payload()


def _put_rating(req: _Request):
    idea_id = req.int_param("idea_id")
    rating = req.platform.rate_idea(
        req.user,
        idea_id,
        relevance=req.field("relevance", int),
        feasibility=req.field("feasibility", int),
        originality=req.field("originality", int),
        impact=req.field("impact", int),
    )
    return 200, {
        "rating": rating.to_payload(),
        "score": req.platform.aggregate(idea_id).to_payload(),
    }


def _post_comment(req: _Request):
    comment = req.platform.comment_on_idea(
        req.user,
        req.int_param("idea_id"),
        body=req.field("body", str),
        parent_comment_id=req.field("parent_comment_id", int, required=False,
                                    default=None),
    )
    return 201, comment.to_payload()


def _get_comments(req: _Request):
    comments = req.platform.comments_for(req.user, req.int_param("idea_id"))
    return 200, {"comments": [c.to_payload() for c in comments]}


def _post_project(req: _Request):
    project = req.platform.create_project(
        req.user, req.field("idea_id", int), req.field("name", str)
    )
    return 201, {"project": project.to_payload()}


def _get_project(req: _Request):
    project = req.platform.get_project(req.user, req.int_param("project_id"))
    progress = req.platform.project_progress(req.user, project.project_id)
    return 200, {"project": project.to_payload(), "progress": round(progress, 6)}


def _join_project(req: _Request):
    project = req.platform.join_project(req.user, req.int_param("project_id"))
    return 200, {"project": project.to_payload()}


def _leave_project(req: _Request):
    project = req.platform.leave_project(
        req.user, req.int_param("project_id"), req.int_param("user_id")
    )
    return 200, {"project": project.to_payload()}


def _put_task(req: _Request):
    status = None
    raw_status = req.field("status", str, required=False, default=None)
    if raw_status is not None:
        try:
            status = TaskStatus(raw_status)
        except ValueError:
            raise BadRequest(
                f"status must be 'open', 'in_progress' or 'done', got {raw_status!r}"
            )
    deadline = None
    raw_deadline = req.field("deadline", str, required=False, default=None)
    if raw_deadline is not None:
        try:
            deadline = parse_ts(raw_deadline)
        except ValueError:
            raise BadRequest("deadline must be an RFC 3339 UTC timestamp")
    existed = req.platform.version_of(KIND_TASK, req.params["task_id"]) > 0
    task = req.platform.upsert_task(
        req.user,
        req.params["task_id"],
        project_id=req.field("project_id", int),
        title=req.field("title", str, required=False, default=None),
        assignee_id=req.field("assignee_id", int, required=False, default=None),
        deadline=deadline,
        status=status,
        expected_version=req.field("expected_version", int, required=False,
                                   default=None),
    )
    payload = task.to_payload()
    payload["version"] = req.platform.version_of(KIND_TASK, task.task_id)
    return (200 if existed else 201), payload


def _get_tasks(req: _Request):
    tasks = req.platform.project_tasks(req.user, req.int_param("project_id"))
    return 200, {"tasks": [t.to_payload() for t in tasks]}


def _get_progress(req: _Request):
    project_id = req.int_param("project_id")
    tasks = req.platform.project_tasks(req.user, project_id)
    done = sum(1 for t in tasks if t.status is TaskStatus.DONE)
    progress = req.platform.project_progress(req.user, project_id)
    return 200, {
        "project_id": project_id,
        "progress": round(progress, 6),
        "done": done,
        "total": len(tasks),
    }


def _export_tasks(req: _Request):
    tasks = req.platform.project_tasks(req.user, req.int_param("project_id"))
    body = "".join(
        json.dumps(t.to_payload(), sort_keys=True, separators=(",", ":"),
                   ensure_ascii=False) + "\n"
        for t in tasks
    )
    return 200, _Raw(body.encode("utf-8"), "application/x-ndjson")


def _leaderboard(req: _Request):
    rows = req.platform.leaderboard(req.query_int("n", 10))
    return 200, {
        "leaderboard": [
            {
                "user_id": user.user_id,
                "display_name": user.display_name,
                "reputation_points": points,
            }
            for user, points in rows
        ]
    }


def _admin_users(req: _Request):
    users = req.platform.list_users(req.user)
    return 200, {"users": [req.platform.user_payload(u) for u in users]}


def _admin_set_group(req: _Request):
    user = req.platform.set_user_group(
        req.user, req.int_param("user_id"), req.field("group_id", int)
    )
    return 200, req.platform.user_payload(user)


class _Raw:
    """Pre-encoded non-JSON response body."""

    def __init__(self, data: bytes, content_type: str) -> None:
        self.data = data
        self.content_type = content_type


_ID = r"(?P<{}>\d+)"
_TASK_ID = r"(?P<task_id>[A-Za-z0-9_-]+)"

ROUTES: list[Route] = [
    Route("POST", "/sessions", Action.READ_PUBLIC, _post_session),
    Route("DELETE", "/sessions/current", Action.READ_PUBLIC, _delete_session),
    Route("POST", "/users", Action.READ_PUBLIC, _post_user),
    Route("GET", f"/users/{_ID.format('user_id')}", Action.READ_PUBLIC, _get_user),
    Route("GET", f"/users/{_ID.format('user_id')}/collaborators",
          Action.READ_PUBLIC, _get_collaborators),
    Route("POST", "/ideas", Action.SUBMIT_IDEA, _post_idea),
    Route("GET", "/ideas/search", Action.READ_PUBLIC, _search),
    Route("GET", "/ideas/best", Action.READ_PUBLIC, _best_idea),
    Route("GET", f"/ideas/{_ID.format('idea_id')}", Action.READ_PUBLIC, _get_idea),
    Route("POST", f"/ideas/{_ID.format('idea_id')}/resubmit",
          Action.SUBMIT_IDEA, _post_resubmit),
    Route("PATCH", f"/ideas/{_ID.format('idea_id')}/visibility",
          Action.SET_VISIBILITY, _patch_visibility),
    Route("GET", f"/ideas/{_ID.format('idea_id')}/similar",
          Action.READ_PUBLIC, _similar),
    Route("GET", "/moderation/queue", Action.MODERATE_IDEAS, _moderation_queue),
    Route("POST", f"/ideas/{_ID.format('idea_id')}/review",
          Action.MODERATE_IDEAS, _post_review),
    Route("PUT", f"/ideas/{_ID.format('idea_id')}/ratings/mine",
          Action.RATE_IDEA, _put_rating),
    Route("POST", f"/ideas/{_ID.format('idea_id')}/comments",
          Action.COMMENT_IDEA, _post_comment),
    Route("GET", f"/ideas/{_ID.format('idea_id')}/comments",
          Action.READ_PUBLIC, _get_comments),
    Route("POST", "/projects", Action.CREATE_PROJECT, _post_project),
    Route("GET", f"/projects/{_ID.format('project_id')}", Action.READ_PUBLIC,
          _get_project),
    Route("POST", f"/projects/{_ID.format('project_id')}/members",
          Action.JOIN_PROJECT, _join_project),
    Route("DELETE",
          f"/projects/{_ID.format('project_id')}/members/{_ID.format('user_id')}",
          Action.JOIN_PROJECT, _leave_project),
    Route("PUT", f"/tasks/{_TASK_ID}", Action.JOIN_PROJECT, _put_task),
    Route("GET", f"/projects/{_ID.format('project_id')}/tasks.export",
          Action.READ_PUBLIC, _export_tasks),
    Route("GET", f"/projects/{_ID.format('project_id')}/tasks",
          Action.READ_PUBLIC, _get_tasks),
    Route("GET", f"/projects/{_ID.format('project_id')}/progress",
          Action.READ_PUBLIC, _get_progress),
    Route("GET", "/leaderboard", Action.READ_PUBLIC, _leaderboard),
    Route("GET", "/admin/users", Action.MANAGE_USERS, _admin_users),
    Route("PATCH", f"/admin/users/{_ID.format('user_id')}/group",
          Action.MANAGE_USERS, _admin_set_group),
]


def dispatch(
    platform: Platform,
    method: str,
    path: str,
    query: dict[str, list[str]],
    headers: dict[str, str],
    body_bytes: bytes,
) -> tuple[int, Any]:
    """Full request pipeline minus the socket: returns (status, payload)
    where payload is a JSON-able object, a ``_Raw`` body, or None."""
    if not path.startswith(API_PREFIX):
        return 404, {"error": "not_found", "message": f"no route for {path}"}
    sub_path = path[len(API_PREFIX):] or "/"

    token: Optional[str] = None
    auth = headers.get("authorization", "")
    if auth:
        parts = auth.split(None, 1)
        if len(parts) != 2 or parts[0].lower() != "bearer" or not parts[1].strip():
            return 401, {"error": "bad_authorization",
                         "message": "expected 'Authorization: Bearer <token>'"}
        token = parts[1].strip()

    user: Optional[UserAccount] = None
    bad_token = False
    if token is not None:
        try:
            user = platform.resolve_session(token)
        except SessionExpired:
            bad_token = True

    matched_path = False
    for route in ROUTES:
        match = route.regex.match(sub_path)
        if match is None:
            continue
        matched_path = True
        if route.method != method:
            continue
        try:
            decision = access.can(user, route.action)
            if not decision.allowed:
                if bad_token:
                    raise SessionExpired("session is missing, expired, or revoked")
                raise PermissionDenied(decision.reason)
            body: Optional[dict] = None
            if body_bytes:
                try:
                    parsed = json.loads(body_bytes.decode("utf-8"))
                except (ValueError, UnicodeDecodeError):
                    raise BadRequest("request body must be valid JSON")
                if not isinstance(parsed, dict):
                    raise BadRequest("request body must be a JSON object")
                body = parsed
            request = _Request(
                platform, user, bad_token, token, match.groupdict(), query, body
            )
            return route.handler(request)
        except IdeaForgeError as exc:
            return exc.http_status, exc.to_payload()
    if matched_path:
        return 405, {"error": "method_not_allowed",
                     "message": f"{method} not supported on {sub_path}"}
    return 404, {"error": "not_found", "message": f"no route for {sub_path}"}


class _ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "ideaforge"
    disable_nagle_algorithm = True  # small JSON responses; latency matters
    platform: Platform = None  # set by serve()
    ui_dir: Optional[Path] = None

    def log_message(self, fmt, *args):  # route through logging, not stderr
        logger.debug("%s " + fmt, self.address_string(), *args)

    def _respond(self, status: int, payload: Any) -> None:
        if isinstance(payload, _Raw):
            data = payload.data
            content_type = payload.content_type
        elif payload is None:
            data = b""
            content_type = "application/json"
        else:
            data = (json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")
            content_type = "application/json"
        self.send_response(status)
        if data or status not in (204, 304):
            self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        if data and self.command != "HEAD":
            self.wfile.write(data)

    def _serve_static(self, path: str) -> None:
        if self.ui_dir is None:
            self._respond(404, {"error": "not_found",
                                "message": "no UI bundle configured"})
            return
        rel = path[len("/app"):].lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.ui_dir.resolve())) or not target.is_file():
            # SPA fallback: unknown paths under /app render the shell
            target = (self.ui_dir / "index.html").resolve()
            if not target.is_file():
                self._respond(404, {"error": "not_found", "message": "missing asset"})
                return
        content_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        data = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _handle(self) -> None:
        split = urlsplit(self.path)
        path = split.path
        if path == "/":
            self._respond(200, {"service": "ideaforge", "api": API_PREFIX,
                                "app": "/app/" if self.ui_dir else None})
            return
        if path == "/app" or path.startswith("/app/"):
            self._serve_static(path)
            return
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        headers = {k.lower(): v for k, v in self.headers.items()}
        try:
            status, payload = dispatch(
                self.platform, self.command, path, parse_qs(split.query),
                headers, body,
            )
        except Exception:
            logger.exception("unhandled error for %s %s", self.command, path)
            status, payload = 500, {"error": "internal", "message": "internal error"}
        self._respond(status, payload)

    do_GET = do_POST = do_PUT = do_PATCH = do_DELETE = _handle


def make_server(
    platform: Platform, host: str = "127.0.0.1", port: int = 8080,
    ui_dir: Optional[str] = None,
) -> ThreadingHTTPServer:
    handler = type(
        "BoundApiHandler",
        (_ApiHandler,),
        {"platform": platform, "ui_dir": Path(ui_dir) if ui_dir else None},
    )
    try:
        server = ThreadingHTTPServer((host, port), handler)
    except OSError as exc:
        raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
    server.daemon_threads = True
    return server


def serve_forever(server: ThreadingHTTPServer) -> None:
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
