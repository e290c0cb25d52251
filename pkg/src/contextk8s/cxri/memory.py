"""In-memory tabular connector standing in for database and SaaS sources."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime

from ..errors import ConnectFailed, ConnectionLost, NotFound, WriteFailed
from ..registry import ContextUnit
from .base import Connector, HealthState, Status, Subscription, WriteResult


@dataclass
class Row:
    content: str
    timestamp: datetime
    author: str = "unknown"
    sensitivity: str = "internal"
    authority: float = 0.5
    entities: tuple[str, ...] = ()
    unit_type: str = "structured"
    revision: int = 1


@dataclass
class InMemoryStore:
    """A named table of rows keyed by path. Flip ``available`` to simulate outages."""

    name: str
    rows: dict[str, Row] = field(default_factory=dict)
    available: bool = True
    read_only: bool = False
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def put(self, path: str, content: str, timestamp: datetime, **meta) -> None:
        with self._lock:
            prev = self.rows.get(path)
            rev = prev.revision + 1 if prev else 1
            self.rows[path] = Row(content=content, timestamp=timestamp, revision=rev, **meta)

    def delete(self, path: str) -> None:
        with self._lock:
            self.rows.pop(path, None)


_STORES: dict[str, InMemoryStore] = {}
_STORES_LOCK = threading.Lock()


def register_store(store: InMemoryStore) -> InMemoryStore:
    with _STORES_LOCK:
        _STORES[store.name] = store
    return store


def get_store(name: str) -> InMemoryStore | None:
    with _STORES_LOCK:
        return _STORES.get(name)


def drop_store(name: str) -> None:
    with _STORES_LOCK:
        _STORES.pop(name, None)


class InMemoryConnector(Connector):
    kind = "in-memory"

    def __init__(self, spec, ctx, clock=None, store: InMemoryStore | None = None):
        super().__init__(spec, ctx, clock)
        self.store = store

    def open(self) -> None:
        if self.store is None:
            name = self.spec.config.get("store")
            if name:
                self.store = get_store(name)
                if self.store is None:
                    raise ConnectFailed(f"source {self.spec.name}: store {name!r} not found")
            elif self.spec.type == "connector":
                # External SaaS systems are parsed but not reachable: an empty stub.
                self.store = InMemoryStore(f"stub:{self.spec.config.get('system', self.spec.name)}")
            else:
                raise ConnectFailed(f"source {self.spec.name}: config.store is required")
        if not self.store.available:
            raise ConnectFailed(f"source {self.spec.name}: store {self.store.name} unavailable")
        self.alive = True

    def _check(self) -> None:
        self._require_alive()
        if not self.store.available:
            self.alive = False
            raise ConnectionLost(f"store {self.store.name} unavailable")

    def _unit(self, path: str, row: Row) -> ContextUnit:
        version = self._track(path, row.content)
        return self.ctx.make_unit(
            path,
            row.content,
            version,
            author=row.author,
            timestamp=row.timestamp,
            sensitivity=row.sensitivity,
            authority=row.authority,
            entities=row.entities,
            unit_type=row.unit_type,
        )

    def list_paths(self) -> list[str]:
        self._check()
        with self.store._lock:
            return sorted(self.store.rows)

    def query(self, q: str) -> list[ContextUnit]:
        self._check()
        needle = q.lower()
        with self.store._lock:
            rows = sorted(self.store.rows.items())
        out = []
        for path, row in rows:
            cells = [row.content, row.author, path, *row.entities]
            if not needle or any(needle in c.lower() for c in cells):
                out.append(self._unit(path, row))
        return out

    def read(self, path: str) -> ContextUnit:
        self._check()
        with self.store._lock:
            row = self.store.rows.get(path)
        if row is None:
            raise NotFound(f"{self.spec.name}:{path} does not exist")
        return self._unit(path, row)

    def write(self, path: str, content: str, *, author: str = "contextk8s") -> WriteResult:
        self._check()
        if self.store.read_only:
            raise WriteFailed(f"store {self.store.name} is read-only")
        self.store.put(path, content, self.clock.now(), author=author)
        return WriteResult(path, self._bump(path, content))

    def _signatures(self) -> dict[str, int]:
        if not self.store.available:
            self.alive = False
            raise ConnectionLost(f"store {self.store.name} unavailable")
        with self.store._lock:
            return {p: r.revision for p, r in self.store.rows.items()}

    def subscribe(self, path_glob: str = "*") -> Subscription:
        self._check()
        return Subscription(self._signatures, path_glob, self.clock)

    def health(self) -> Status:
        def probe():
            if self.store is None:
                return HealthState.DISCONNECTED, "not connected"
            if not self.store.available:
                return HealthState.DISCONNECTED, f"store {self.store.name} unavailable"
            return HealthState.CONNECTED, "ok"

        return self.timed_health(probe)
