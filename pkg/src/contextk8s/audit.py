"""Append-only audit log with in-memory and JSONL backends.

Events get a gapless ``seq`` at append time. A backend failure surfaces as
``AuditBackendFailure`` and consumes no sequence number; callers treat it as
a reason to refuse whatever they were about to do.
"""

from __future__ import annotations

import enum
import json
import os
import re
import sys
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Mapping

from .errors import AuditBackendFailure, AuditRejected
from .timeutil import SystemClock, from_rfc3339, to_rfc3339, utc


def contains_secret(text: str, secret: str) -> bool:
    """True if ``secret`` occurs in ``text`` as a standalone digit run."""
    if not secret:
        return False
    return re.search(rf"(?<!\d){re.escape(secret)}(?!\d)", text) is not None


class EventKind(str, enum.Enum):
    SESSION_CREATED = "session_created"
    SESSION_KILLED = "session_killed"
    CONTEXT_REQUESTED = "context_requested"
    CONTEXT_DELIVERED = "context_delivered"
    CONTEXT_DENIED = "context_denied"
    ACTION_SUBMITTED = "action_submitted"
    ACTION_EXECUTED = "action_executed"
    APPROVAL_REQUESTED = "approval_requested"
    APPROVAL_RESOLVED = "approval_resolved"
    APPROVAL_REJECTED = "approval_rejected"
    OTP_ISSUED = "otp_issued"
    RECONCILE_DELTA = "reconcile_delta"
    SOURCE_STATE_CHANGE = "source_state_change"


_FORBIDDEN_DETAIL_KEYS = {"otp", "otp_code", "one_time_password"}

# Serialised key order; fixed so files diff cleanly.
FIELDS = ("seq", "at", "kind", "session_id", "user", "agent_id", "domain", "outcome", "detail")


@dataclass(frozen=True)
class AuditEvent:
    kind: EventKind
    outcome: str = ""
    session_id: str | None = None
    user: str | None = None
    agent_id: str | None = None
    domain: str | None = None
    detail: Mapping[str, str] = field(default_factory=dict)
    seq: int = 0
    at: datetime | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        clean = {}
        for k, v in dict(self.detail).items():
            if str(k).lower() in _FORBIDDEN_DETAIL_KEYS:
                raise AuditRejected(f"audit detail may not carry {k!r}")
            clean[str(k)] = v if isinstance(v, str) else json.dumps(v, sort_keys=True, default=str)
        object.__setattr__(self, "detail", clean)

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "at": to_rfc3339(self.at) if self.at else None,
            "kind": self.kind.value,
            "session_id": self.session_id,
            "user": self.user,
            "agent_id": self.agent_id,
            "domain": self.domain,
            "outcome": self.outcome,
            "detail": dict(sorted(self.detail.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: Mapping) -> "AuditEvent":
        return cls(
            kind=EventKind(d["kind"]),
            outcome=d.get("outcome", ""),
            session_id=d.get("session_id"),
            user=d.get("user"),
            agent_id=d.get("agent_id"),
            domain=d.get("domain"),
            detail=d.get("detail") or {},
            seq=d["seq"],
            at=from_rfc3339(d["at"]) if d.get("at") else None,
        )


class MemoryBackend:
    def __init__(self):
        self.fail = False

    def write(self, line: str) -> None:
        if self.fail:
            raise OSError("memory backend marked as failing")

    def existing(self) -> list[str]:
        return []


class JsonlBackend:
    def __init__(self, path: str | os.PathLike, *, fsync: bool = False, mirror_stdout: bool = False):
        self.path = Path(path)
        self.fsync = fsync
        self.mirror_stdout = mirror_stdout
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "a", encoding="utf-8")

    def existing(self) -> list[str]:
        if not self.path.exists():
            return []
        return [line for line in self.path.read_text(encoding="utf-8").splitlines() if line.strip()]

    def write(self, line: str) -> None:
        self._fh.write(line + "\n")
        self._fh.flush()
        if self.fsync:
            os.fsync(self._fh.fileno())
        if self.mirror_stdout:
            print(line, file=sys.stdout, flush=True)

    def close(self) -> None:
        self._fh.close()


class AuditLog:
    def __init__(self, backend=None, *, clock=None):
        self.backend = backend if backend is not None else MemoryBackend()
        self.clock = clock or SystemClock()
        self._lock = threading.Lock()
        self._events: list[AuditEvent] = [AuditEvent.from_dict(json.loads(l)) for l in self.backend.existing()]
        self._secrets: set[str] = set()

    # Secrets registered here (issued OTPs) must never reach the log.
    def add_secret(self, secret: str) -> None:
        with self._lock:
            self._secrets.add(secret)

    def discard_secret(self, secret: str) -> None:
        with self._lock:
            self._secrets.discard(secret)

    def append(self, event: AuditEvent | EventKind | str, **fields) -> int:
        if not isinstance(event, AuditEvent):
            event = AuditEvent(kind=EventKind(event), **fields)
        elif fields:
            raise TypeError("pass either an AuditEvent or a kind plus fields")
        with self._lock:
            seq = len(self._events) + 1
            stamped = AuditEvent(
                kind=event.kind,
                outcome=event.outcome,
                session_id=event.session_id,
                user=event.user,
                agent_id=event.agent_id,
                domain=event.domain,
                detail=event.detail,
                seq=seq,
                at=utc(event.at or self.clock.now()),
            )
            line = stamped.to_json()
            if any(contains_secret(line, s) for s in self._secrets):
                raise AuditRejected("audit event would disclose a secret value")
            try:
                self.backend.write(line)
            except Exception as exc:
                raise AuditBackendFailure(f"audit backend write failed: {exc}") from exc
            self._events.append(stamped)
            return seq

    def query(
        self,
        *,
        session: str | None = None,
        user: str | None = None,
        kind: EventKind | str | Iterable[EventKind | str] | None = None,
        agent_id: str | None = None,
        domain: str | None = None,
        since: datetime | None = None,
        until: datetime | None = None,
    ) -> list[AuditEvent]:
        kinds = None
        if kind is not None:
            if isinstance(kind, (str, EventKind)):
                kind = [kind]
            kinds = {EventKind(k) for k in kind}
        with self._lock:
            events = list(self._events)
        out = []
        for e in events:
            if session is not None and e.session_id != session:
                continue
            if user is not None and e.user != user:
                continue
            if agent_id is not None and e.agent_id != agent_id:
                continue
            if domain is not None and e.domain != domain:
                continue
            if kinds is not None and e.kind not in kinds:
                continue
            if since is not None and e.at < utc(since):
                continue
            if until is not None and e.at > utc(until):
                continue
            out.append(e)
        return out

    def __len__(self) -> int:
        with self._lock:
            return len(self._events)
