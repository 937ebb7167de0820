"""Embedded append-only record store with write-ahead discipline.

One log file, one canonical-JSON record per line. A write is acknowledged
only after the line is fsynced, so restart always recovers exactly the
acknowledged state. The latest version per (kind, id) wins on load.

Tail-line anomalies (torn writes from a crash mid-append) are recoverable;
anything wrong earlier in the log is corruption and the store refuses to
open.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Any, Iterator, Optional

from .errors import StoreCorruption, VersionConflict

LOG_FILENAME = "records.log"


def canonical_json(obj: Any) -> str:
    """Sorted keys, no insignificant whitespace, UTF-8 text, no NaN/inf."""
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    )


def _checksum(kind: str, record_id: str, version: int, payload: Any) -> str:
    body = canonical_json(
        {"id": record_id, "kind": kind, "payload": payload, "version": version}
    )
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def _id_sort_key(record_id: str) -> tuple:
    # Numeric ids sort numerically, others lexically; keeps exports readable
    # while staying deterministic.
    if record_id.isdigit():
        return (0, int(record_id), "")
    return (1, 0, record_id)


class Store:
    """Last-write-wins record table backed by an append-only log.

    ``data_dir=None`` keeps everything in memory (used heavily by tests).
    ``recover=False`` opens read-only: a torn tail is skipped, not truncated
    (safe while another process owns the log).
    """

    def __init__(self, data_dir: Optional[str | Path] = None, recover: bool = True):
        self._lock = threading.Lock()
        self._records: dict[tuple[str, str], tuple[int, str]] = {}
        self._path: Optional[Path] = None
        self._fh = None
        if data_dir is not None:
            directory = Path(data_dir)
            directory.mkdir(parents=True, exist_ok=True)
            self._path = directory / LOG_FILENAME
            self._load(recover=recover)
            if recover:
                self._fh = open(self._path, "ab")

    # -- loading ---------------------------------------------------------

    def _load(self, recover: bool) -> None:
        if not self._path.exists():
            if recover:
                self._path.touch()
            return
        raw = self._path.read_bytes()
        pos = 0
        good_end = 0  # byte length of the acknowledged prefix
        line_no = 0
        while pos < len(raw):
            newline_at = raw.find(b"\n", pos)
            terminated = newline_at != -1
            end = newline_at + 1 if terminated else len(raw)
            line = raw[pos : newline_at if terminated else end]
            line_no += 1
            if not terminated:
                # A record is acknowledged only after its full line (newline
                # included) is fsynced; an unterminated tail is a torn write.
                break
            try:
                record = json.loads(line.decode("utf-8"))
                kind = record["kind"]
                record_id = record["id"]
                version = record["version"]
                payload = record["payload"]
                if record["checksum"] != _checksum(kind, record_id, version, payload):
                    raise ValueError("checksum mismatch")
                if not isinstance(kind, str) or not isinstance(record_id, str):
                    raise ValueError("kind and id must be strings")
                if not isinstance(version, int):
                    raise ValueError("version must be an integer")
            except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
                raise StoreCorruption(
                    f"corrupt record at line {line_no} of {self._path}: {exc}"
                ) from exc
            self._records[(kind, record_id)] = (version, canonical_json(payload))
            good_end = end
            pos = end
        if recover and good_end < len(raw):
            with open(self._path, "r+b") as fh:
                fh.truncate(good_end)

    # -- reads -----------------------------------------------------------

    def get(self, kind: str, record_id: str) -> Optional[tuple[int, dict]]:
        with self._lock:
            entry = self._records.get((kind, record_id))
        if entry is None:
            return None
        version, payload_json = entry
        return version, json.loads(payload_json)

    def items(self, kind: str) -> list[tuple[str, int, dict]]:
        with self._lock:
            entries = [
                (record_id, version, payload_json)
                for (k, record_id), (version, payload_json) in self._records.items()
                if k == kind
            ]
        entries.sort(key=lambda e: _id_sort_key(e[0]))
        return [(rid, ver, json.loads(pj)) for rid, ver, pj in entries]

    def kinds(self) -> list[str]:
        with self._lock:
            return sorted({k for (k, _) in self._records})

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    # -- writes ----------------------------------------------------------

    def put(
        self,
        kind: str,
        record_id: str,
        payload: dict,
        expected_version: Optional[int] = None,
    ) -> int:
        """Append a new version of (kind, id); fsync before acknowledging.

        ``expected_version=0`` demands the record not exist yet; a positive
        value demands that exact current version; ``None`` skips the check.
        """
        with self._lock:
            current = self._records.get((kind, record_id))
            current_version = current[0] if current else 0
            if expected_version is not None and expected_version != current_version:
                raise VersionConflict(
                    f"{kind}/{record_id}: expected version {expected_version}, "
                    f"have {current_version}",
                    kind=kind,
                    id=record_id,
                    current_version=current_version,
                )
            version = current_version + 1
            payload_json = canonical_json(payload)
            if self._fh is not None:
                line = canonical_json(
                    {
                        "checksum": _checksum(kind, record_id, version, payload),
                        "id": record_id,
                        "kind": kind,
                        "payload": payload,
                        "version": version,
                    }
                )
                self._fh.write(line.encode("utf-8") + b"\n")
                self._fh.flush()
                os.fsync(self._fh.fileno())
            self._records[(kind, record_id)] = (version, payload_json)
            return version

    # -- export ----------------------------------------------------------

    def export_lines(self) -> Iterator[str]:
        """Full state as JSON lines, sorted by (kind, id): the comparison
        format for crash-consistency checks."""
        with self._lock:
            snapshot = sorted(
                self._records.items(), key=lambda kv: (kv[0][0], _id_sort_key(kv[0][1]))
            )
        for (kind, record_id), (version, payload_json) in snapshot:
            yield (
                '{"kind":' + canonical_json(kind)
                + ',"id":' + canonical_json(record_id)
                + ',"version":' + str(version)
                + ',"payload":' + payload_json
                + "}"
            )

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
