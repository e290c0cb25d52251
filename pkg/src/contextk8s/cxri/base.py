"""Connector contract: connect, query, read, write, subscribe, health."""

from __future__ import annotations

import abc
import enum
import hashlib
import time
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Iterator, Mapping

from ..errors import ConnectionLost
from ..globs import glob_match
from ..manifest import DomainManifest, SourceSpec
from ..registry import ContextUnit, Sensitivity, UnitMetadata, UnitType, unit_id
from ..text import HashedTfidf
from ..timeutil import SystemClock, utc


class HealthState(str, enum.Enum):
    CONNECTED = "Connected"
    DEGRADED = "Degraded"
    DISCONNECTED = "Disconnected"


@dataclass(frozen=True)
class Status:
    state: HealthState
    detail: str = ""
    latency_ms: float = 0.0

    @property
    def ok(self) -> bool:
        return self.state is not HealthState.DISCONNECTED


class ChangeKind(str, enum.Enum):
    CREATED = "created"
    MODIFIED = "modified"
    DELETED = "deleted"


@dataclass(frozen=True)
class ChangeEvent:
    path: str
    kind: ChangeKind
    observed_at: datetime


@dataclass(frozen=True)
class WriteResult:
    path: str
    new_version: int


@dataclass
class IngestContext:
    """How raw records become ContextUnits for one domain/source."""

    domain: str
    source: str
    manifest: DomainManifest | None = None
    vectorizer: HashedTfidf = field(default_factory=HashedTfidf)
    default_roles: frozenset[str] = frozenset()

    def roles_for(self, path: str) -> frozenset[str]:
        if self.manifest is not None:
            return self.manifest.access.readers_of(path)
        return self.default_roles

    def make_unit(
        self,
        path: str,
        content: str,
        version: int,
        *,
        author: str = "unknown",
        timestamp: datetime,
        sensitivity: str = "internal",
        authority: float = 0.5,
        entities=(),
        unit_type: str = "unstructured",
    ) -> ContextUnit:
        meta = UnitMetadata(
            author=author,
            timestamp=utc(timestamp),
            domain=self.domain,
            source=self.source,
            path=path,
            sensitivity=Sensitivity(sensitivity),
            entities=tuple(entities),
            authority=float(authority),
        )
        return ContextUnit(
            id=unit_id(self.domain, self.source, path),
            content=content,
            unit_type=UnitType(unit_type),
            metadata=meta,
            version=version,
            vector=tuple(self.vectorizer.transform(content).tolist()),
            authorized_roles=self.roles_for(path),
        )


def content_digest(content: str) -> str:
    return hashlib.sha256(content.encode("utf-8")).hexdigest()


class Connector(abc.ABC):
    """One live connection to a backing store; single owner, not thread-safe."""

    kind: str = ""

    def __init__(self, spec: SourceSpec, ctx: IngestContext, clock=None):
        self.spec = spec
        self.ctx = ctx
        self.clock = clock or SystemClock()
        self.alive = False
        # path -> (digest, version) as last handed out by read()/query()
        self._versions: dict[str, tuple[str, int]] = {}

    @property
    def connector_kind(self) -> str:
        return self.kind

    @property
    def config(self) -> Mapping[str, str]:
        return self.spec.config

    # The six operations.

    @abc.abstractmethod
    def open(self) -> None:
        """Establish the connection or raise ConnectFailed."""

    @abc.abstractmethod
    def query(self, q: str) -> list[ContextUnit]: ...

    @abc.abstractmethod
    def read(self, path: str) -> ContextUnit: ...

    @abc.abstractmethod
    def write(self, path: str, content: str) -> WriteResult: ...

    @abc.abstractmethod
    def subscribe(self, path_glob: str = "*") -> "Subscription": ...

    @abc.abstractmethod
    def health(self) -> Status: ...

    # Extra listing used by ingestion.

    @abc.abstractmethod
    def list_paths(self) -> list[str]: ...

    # helpers

    def _require_alive(self) -> None:
        if not self.alive:
            raise ConnectionLost(f"connection to {self.spec.name} is not alive")

    def _track(self, path: str, content: str) -> int:
        digest = content_digest(content)
        prev = self._versions.get(path)
        if prev is None:
            version = 1
        elif prev[0] == digest:
            version = prev[1]
        else:
            version = prev[1] + 1
        self._versions[path] = (digest, version)
        return version

    def _bump(self, path: str, content: str) -> int:
        prev = self._versions.get(path)
        version = (prev[1] + 1) if prev else 1
        self._versions[path] = (content_digest(content), version)
        return version

    def timed_health(self, probe: Callable[[], tuple[HealthState, str]]) -> Status:
        t0 = time.perf_counter()
        state, detail = probe()
        return Status(state, detail, (time.perf_counter() - t0) * 1000.0)


class Subscription:
    """Polling change stream over a snapshot function.

    ``snapshot()`` returns ``{path: signature}``; it raises ConnectionLost
    when the store is gone, which terminates the stream.
    """

    def __init__(self, snapshot: Callable[[], Mapping[str, object]], path_glob: str, clock):
        self._snapshot = snapshot
        self.path_glob = path_glob
        self.clock = clock
        self.closed = False
        self._last = self._filtered()

    def _filtered(self) -> dict[str, object]:
        return {p: sig for p, sig in self._snapshot().items() if glob_match(self.path_glob, p, assigned=None)}

    def poll(self) -> list[ChangeEvent]:
        if self.closed:
            raise ConnectionLost("subscription is closed")
        try:
            current = self._filtered()
        except ConnectionLost:
            self.closed = True
            raise
        now = self.clock.now()
        events = []
        for path in sorted(set(self._last) | set(current)):
            before, after = self._last.get(path), current.get(path)
            if before is None:
                events.append(ChangeEvent(path, ChangeKind.CREATED, now))
            elif after is None:
                events.append(ChangeEvent(path, ChangeKind.DELETED, now))
            elif before != after:
                events.append(ChangeEvent(path, ChangeKind.MODIFIED, now))
        self._last = current
        return events

    def __iter__(self) -> Iterator[ChangeEvent]:
        return iter(self.poll())

    def close(self) -> None:
        self.closed = True
