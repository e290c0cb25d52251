"""The Context Runtime Interface.

Orchestration code talks to stores only through the six functions below;
``connect`` is the single place where a source type picks a connector class.
"""

from __future__ import annotations

from ..errors import ConnectFailed
from ..manifest import DomainManifest, SourceSpec
from ..registry import ContextUnit
from ..text import HashedTfidf
from .base import (
    ChangeEvent,
    ChangeKind,
    Connector,
    HealthState,
    IngestContext,
    Status,
    Subscription,
    WriteResult,
)
from .filesystem import SIDECAR, FileSystemConnector, GitDirConnector
from .memory import InMemoryConnector, InMemoryStore, drop_store, get_store, register_store

Connection = Connector

_DISPATCH = {
    "file-system": FileSystemConnector,
    "git-repo": GitDirConnector,
    "database": InMemoryConnector,
    "connector": InMemoryConnector,
}


def connect(
    spec: SourceSpec,
    *,
    manifest: DomainManifest | None = None,
    domain: str | None = None,
    base_dir=None,
    vectorizer: HashedTfidf | None = None,
    clock=None,
    default_roles=(),
) -> Connection:
    cls = _DISPATCH.get(spec.type)
    if cls is None:
        raise ConnectFailed(f"unsupported source type {spec.type!r}")
    ctx = IngestContext(
        domain=domain or (manifest.name if manifest else "default"),
        source=spec.name,
        manifest=manifest,
        vectorizer=vectorizer or HashedTfidf(),
        default_roles=frozenset(default_roles),
    )
    if cls is InMemoryConnector:
        conn = cls(spec, ctx, clock)
    else:
        conn = cls(spec, ctx, clock, base_dir=base_dir)
    conn.open()
    return conn


def query(conn: Connection, q: str) -> list[ContextUnit]:
    return conn.query(q)


def read(conn: Connection, path: str) -> ContextUnit:
    return conn.read(path)


def write(conn: Connection, path: str, content: str) -> WriteResult:
    return conn.write(path, content)


def subscribe(conn: Connection, path_glob: str = "*") -> Subscription:
    return conn.subscribe(path_glob)


def health(conn: Connection) -> Status:
    return conn.health()


__all__ = [
    "ChangeEvent",
    "ChangeKind",
    "Connection",
    "Connector",
    "FileSystemConnector",
    "GitDirConnector",
    "HealthState",
    "InMemoryConnector",
    "InMemoryStore",
    "IngestContext",
    "SIDECAR",
    "Status",
    "Subscription",
    "WriteResult",
    "connect",
    "drop_store",
    "get_store",
    "health",
    "query",
    "read",
    "register_store",
    "subscribe",
    "write",
]
