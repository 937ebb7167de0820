"""Command line entry points: serve, seed-admin, export.

Option resolution: flags win over environment variables, which win over the
config file, which wins over built-in defaults.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from .config import ENV_DATA_DIR, ENV_PORT, PlatformConfig
from .errors import BindFailure, IdeaForgeError
from .httpapi import make_server, serve_forever
from .platform import Platform
from .store import Store

logger = logging.getLogger("ideaforge")

DEFAULT_DATA_DIR = "./ideaforge-data"


def _load_config(path: Optional[str]) -> PlatformConfig:
    return PlatformConfig.from_file(path) if path else PlatformConfig()


def _resolve_data_dir(flag: Optional[str], config: PlatformConfig) -> str:
    return flag or os.environ.get(ENV_DATA_DIR) or config.data_dir or DEFAULT_DATA_DIR


def _resolve_port(flag: Optional[int], config: PlatformConfig) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(ENV_PORT)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise IdeaForgeError(f"{ENV_PORT} must be an integer, got {env!r}")
    return config.port


def cmd_serve(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    data_dir = _resolve_data_dir(args.data_dir, config)
    port = _resolve_port(args.port, config)
    platform = Platform.open(data_dir, config)
    report = platform.bootstrap()
    if report["seeded_groups"]:
        logger.info("seeded the five default user groups")
    if report["created_admin"] is not None:
        logger.info(
            "created bootstrap administrator %s (user %s)",
            config.bootstrap_admin_email, report["created_admin"],
        )
    if report["generated_password"]:
        # printed exactly once; not stored anywhere in clear
        print(
            f"generated bootstrap admin password: {report['generated_password']}",
            flush=True,
        )
    try:
        server = make_server(platform, host=args.host, port=port,
                             ui_dir=args.ui_dir or config.ui_dir)
    except BindFailure as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        platform.close()
        return 1
    actual_port = server.server_address[1]
    print(f"ideaforge listening on http://{args.host}:{actual_port}", flush=True)
    try:
        serve_forever(server)
    finally:
        platform.close()
    return 0


def cmd_seed_admin(args: argparse.Namespace) -> int:
    password = os.environ.get(args.password_env)
    if not password:
        print(
            f"error: environment variable {args.password_env} is not set",
            file=sys.stderr,
        )
        return 2
    config = _load_config(args.config)
    data_dir = _resolve_data_dir(args.data_dir, config)
    platform = Platform.open(data_dir, config)
    try:
        platform.ensure_groups()
        admin = platform.ensure_admin(args.email, password)
        print(f"administrator ready: {args.email} (user {admin.user_id})")
        return 0
    except IdeaForgeError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return 1
    finally:
        platform.close()


def cmd_export(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    data_dir = _resolve_data_dir(args.data_dir, config)
    if not os.path.isdir(data_dir):
        print(f"error: data directory {data_dir!r} does not exist", file=sys.stderr)
        return 1
    # read-only open: never truncates a log owned by a live server
    store = Store(data_dir, recover=False)
    for line in store.export_lines():
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ideaforge",
        description="Self-hostable collaborative idea-management service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--port", type=int, default=None,
                       help=f"listen port (default 8080; env {ENV_PORT})")
    serve.add_argument("--host", default="0.0.0.0", help="bind address")
    serve.add_argument("--data-dir", default=None,
                       help=f"storage directory (env {ENV_DATA_DIR})")
    serve.add_argument("--config", default=None, help="JSON config file")
    serve.add_argument("--ui-dir", default=None,
                       help="static UI bundle served under /app")
    serve.set_defaults(func=cmd_serve)

    seed = sub.add_parser("seed-admin", help="create or reset an administrator")
    seed.add_argument("--email", required=True)
    seed.add_argument("--password-env", required=True,
                      help="name of the env var holding the password")
    seed.add_argument("--data-dir", default=None)
    seed.add_argument("--config", default=None)
    seed.set_defaults(func=cmd_seed_admin)

    export = sub.add_parser("export", help="dump full state as JSON lines")
    export.add_argument("--data-dir", default=None)
    export.add_argument("--config", default=None)
    export.set_defaults(func=cmd_export)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except IdeaForgeError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
