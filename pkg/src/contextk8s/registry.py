"""Authoritative in-process metadata store for domains, units and sources.

Every public method takes the registry lock, so callers always observe a
complete upsert or none of it. For each unit id the registry retains the
current and the previous version; the previous one stays *live* (routable)
until the reconciler settles the pair, which is how two contradictory
versions become visible as ``conflicted``.
"""

from __future__ import annotations

import enum
import json
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateDomain,
    EmptyAuthorizedRoles,
    InvalidUnit,
    UnknownDomain,
    UnknownSource,
)
from .freshness.state import (
    Delta,
    DeltaType,
    FreshnessRecord,
    FreshnessState,
    freshness_state,
)
from .globs import glob_match
from .manifest import DomainManifest, FreshnessPolicy
from .text import token_count
from .timeutil import SystemClock, to_rfc3339, utc

FAILURE_THRESHOLD = 3
HISTORY_DEPTH = 2


class UnitType(str, enum.Enum):
    UNSTRUCTURED = "unstructured"
    STRUCTURED = "structured"
    HYBRID = "hybrid"


class Sensitivity(str, enum.Enum):
    PUBLIC = "public"
    INTERNAL = "internal"
    CONFIDENTIAL = "confidential"


@dataclass(frozen=True)
class UnitMetadata:
    author: str
    timestamp: datetime
    domain: str
    source: str
    path: str
    sensitivity: Sensitivity = Sensitivity.INTERNAL
    entities: tuple[str, ...] = ()
    authority: float = 0.5


@dataclass(frozen=True)
class ContextUnit:
    id: str
    content: str
    unit_type: UnitType
    metadata: UnitMetadata
    version: int
    vector: tuple[float, ...]
    authorized_roles: frozenset[str]

    @property
    def path(self) -> str:
        return self.metadata.path

    @property
    def domain(self) -> str:
        return self.metadata.domain

    @property
    def tokens(self) -> int:
        return token_count(self.content)

    def with_version(self, version: int) -> "ContextUnit":
        return replace(self, version=version)

    def to_dict(self) -> dict:
        m = self.metadata
        return {
            "id": self.id,
            "content": self.content,
            "unit_type": self.unit_type.value,
            "metadata": {
                "author": m.author,
                "timestamp": to_rfc3339(m.timestamp),
                "domain": m.domain,
                "sensitivity": m.sensitivity.value,
                "entities": list(m.entities),
                "source": m.source,
                "path": m.path,
                "authority": m.authority,
            },
            "version": self.version,
            "vector": list(self.vector),
            "authorized_roles": sorted(self.authorized_roles),
        }


def unit_id(domain: str, source: str, path: str) -> str:
    return f"{domain}/{source}/{path}"


class SourceStatus(str, enum.Enum):
    CONNECTED = "connected"
    DEGRADED = "degraded"
    DISCONNECTED = "disconnected"


@dataclass(frozen=True)
class SourceState:
    source: str
    status: SourceStatus = SourceStatus.CONNECTED
    consecutive_failures: int = 0
    last_success: datetime | None = None


@dataclass(frozen=True)
class DomainHandle:
    name: str
    namespace: str
    sources: tuple[str, ...]


@dataclass
class _Stored:
    unit: ContextUnit
    last_verified: datetime
    archived: bool = False
    archive_reason: str = ""
    flagged: bool = False
    forced_stale: bool = False


@dataclass(frozen=True)
class UnitView:
    """A live unit together with its freshness bookkeeping at query time."""

    unit: ContextUnit
    record: FreshnessRecord
    state: FreshnessState
    flagged: bool = False


@dataclass
class _Domain:
    manifest: DomainManifest
    sources: dict[str, SourceState] = field(default_factory=dict)


class Registry:
    def __init__(self, *, clock=None, failure_threshold: int = FAILURE_THRESHOLD):
        if failure_threshold < 1:
            raise ValueError("failure_threshold must be >= 1")
        self.clock = clock or SystemClock()
        self.failure_threshold = failure_threshold
        self._lock = threading.RLock()
        self._domains: dict[str, _Domain] = {}
        self._units: dict[str, list[_Stored]] = {}
        self._deltas: list[Delta] = []

    # -- domains -----------------------------------------------------------

    def register_domain(self, manifest: DomainManifest) -> DomainHandle:
        with self._lock:
            if manifest.name in self._domains:
                raise DuplicateDomain(f"domain {manifest.name!r} already registered")
            self._domains[manifest.name] = _Domain(
                manifest, {s.name: SourceState(s.name) for s in manifest.sources}
            )
            return DomainHandle(manifest.name, manifest.namespace, tuple(s.name for s in manifest.sources))

    def replace_manifest(self, manifest: DomainManifest) -> None:
        """Swap in a new declared manifest, keeping state of surviving sources."""
        with self._lock:
            dom = self._require(manifest.name)
            old = dom.sources
            dom.manifest = manifest
            dom.sources = {s.name: old.get(s.name, SourceState(s.name)) for s in manifest.sources}

    def list_domains(self) -> list[str]:
        with self._lock:
            return sorted(self._domains)

    def manifest(self, domain: str) -> DomainManifest:
        with self._lock:
            return self._require(domain).manifest

    def manifests(self) -> list[DomainManifest]:
        with self._lock:
            return [self._domains[n].manifest for n in sorted(self._domains)]

    def has_domain(self, domain: str) -> bool:
        with self._lock:
            return domain in self._domains

    def _require(self, domain: str) -> _Domain:
        try:
            return self._domains[domain]
        except KeyError:
            raise UnknownDomain(f"domain {domain!r} is not registered") from None

    # -- units -------------------------------------------------------------

    def upsert_unit(self, unit: ContextUnit, *, now: datetime | None = None) -> int:
        """Store ``unit`` and return the version it was stored under."""
        now = utc(now or self.clock.now())
        if not unit.authorized_roles:
            raise EmptyAuthorizedRoles(f"unit {unit.id} has no authorized_roles")
        if token_count(unit.content) <= 0:
            raise InvalidUnit(f"unit {unit.id} has empty content")
        norm = float(np.linalg.norm(unit.vector)) if unit.vector else 0.0
        if norm != 0.0 and abs(norm - 1.0) > 1e-6:
            raise InvalidUnit(f"unit {unit.id} vector norm {norm:.6f} is neither 0 nor 1")
        with self._lock:
            self._require(unit.metadata.domain)
            history = self._units.setdefault(unit.id, [])
            version = history[-1].unit.version + 1 if history else 1
            history.append(_Stored(unit.with_version(version), last_verified=now))
            del history[:-HISTORY_DEPTH]
            return version

    def get_unit(self, uid: str, version: int | None = None) -> ContextUnit | None:
        with self._lock:
            for s in reversed(self._units.get(uid, [])):
                if version is None or s.unit.version == version:
                    return s.unit
            return None

    def versions(self, uid: str) -> list[ContextUnit]:
        with self._lock:
            return [s.unit for s in self._units.get(uid, [])]

    def live_versions(self, uid: str) -> list[ContextUnit]:
        with self._lock:
            return [s.unit for s in self._units.get(uid, []) if not s.archived]

    def unit_ids(self, domain: str | None = None) -> list[str]:
        with self._lock:
            return sorted(
                uid
                for uid, hist in self._units.items()
                if hist and (domain is None or hist[-1].unit.metadata.domain == domain)
            )

    def _policy(self, unit: ContextUnit) -> FreshnessPolicy:
        dom = self._domains.get(unit.metadata.domain)
        if dom is None:
            raise UnknownDomain(unit.metadata.domain)
        return dom.manifest.freshness.policy_for(unit.metadata.path)

    def _record(self, stored: _Stored, live_count: int) -> FreshnessRecord:
        policy = self._policy(stored.unit)
        rec = FreshnessRecord(
            unit_id=stored.unit.id,
            state=FreshnessState.FRESH,
            last_verified=stored.last_verified,
            governing_policy=policy,
            live_versions=live_count,
            forced_stale=stored.forced_stale,
        )
        return rec

    def freshness_record(self, uid: str, now: datetime | None = None) -> FreshnessRecord | None:
        """Record for the newest live version of ``uid`` with its state filled in."""
        now = utc(now or self.clock.now())
        with self._lock:
            live = [s for s in self._units.get(uid, []) if not s.archived]
            if not live:
                return None
            rec = self._record(live[-1], len(live))
            return replace(rec, state=freshness_state(rec, now))

    def views(self, domain: str, now: datetime | None = None, *, include_archived: bool = False) -> list[UnitView]:
        """Every stored version in ``domain`` with its freshness state."""
        now = utc(now or self.clock.now())
        with self._lock:
            self._require(domain)
            out = []
            for hist in self._units.values():
                if not hist or hist[-1].unit.metadata.domain != domain:
                    continue
                live_count = sum(1 for s in hist if not s.archived)
                for s in hist:
                    if s.archived and not include_archived:
                        continue
                    rec = self._record(s, live_count if not s.archived else 1)
                    state = freshness_state(rec, now)
                    out.append(UnitView(s.unit, replace(rec, state=state), state, s.flagged))
            out.sort(key=lambda v: (v.unit.metadata.path, v.unit.metadata.source, -v.unit.version))
            return out

    def query_units(
        self,
        domain: str,
        filter: dict | None = None,
        *,
        path_glob: str | None = None,
        min_version: int | None = None,
        freshness_states: Iterable[FreshnessState | str] | None = None,
        now: datetime | None = None,
    ) -> list[ContextUnit]:
        """Live units of ``domain`` ordered by (path, version descending)."""
        filter = dict(filter or {})
        path_glob = filter.pop("path_glob", path_glob)
        min_version = filter.pop("min_version", min_version)
        freshness_states = filter.pop("freshness_states", freshness_states)
        if filter:
            raise ValueError(f"unknown filter keys {sorted(filter)}")
        wanted = None
        if freshness_states is not None:
            wanted = {FreshnessState(s) for s in freshness_states}
        out = []
        for v in self.views(domain, now):
            if path_glob is not None and not glob_match(path_glob, v.unit.metadata.path, assigned=None):
                continue
            if min_version is not None and v.unit.version < min_version:
                continue
            if wanted is not None and v.state not in wanted:
                continue
            out.append(v.unit)
        return out

    # -- freshness bookkeeping --------------------------------------------

    def _live(self, uid: str) -> list[_Stored]:
        return [s for s in self._units.get(uid, []) if not s.archived]

    def mark_verified(self, uid: str, now: datetime | None = None) -> None:
        now = utc(now or self.clock.now())
        with self._lock:
            for s in self._live(uid):
                s.last_verified = now
                s.flagged = False
                s.forced_stale = False

    def flag(self, uid: str) -> None:
        with self._lock:
            for s in self._live(uid):
                s.flagged = True

    def archive(self, uid: str, version: int | None = None, reason: str = "") -> int:
        """Remove versions from the routable set; history is retained."""
        n = 0
        with self._lock:
            for s in self._live(uid):
                if version is None or s.unit.version == version:
                    s.archived = True
                    s.archive_reason = reason
                    n += 1
        return n

    def is_flagged(self, uid: str) -> bool:
        with self._lock:
            return any(s.flagged for s in self._live(uid))

    def archive_reason(self, uid: str, version: int) -> str | None:
        with self._lock:
            for s in self._units.get(uid, []):
                if s.unit.version == version and s.archived:
                    return s.archive_reason
            return None

    def mark_source_stale(self, domain: str, source: str) -> list[str]:
        """Force every live unit backed by ``source`` to at least stale."""
        hit = []
        with self._lock:
            for uid, hist in self._units.items():
                for s in hist:
                    m = s.unit.metadata
                    if not s.archived and m.domain == domain and m.source == source:
                        s.forced_stale = True
                        hit.append(uid)
        return sorted(set(hit))

    def set_authorized_roles(self, uid: str, roles: frozenset[str]) -> None:
        """Recompute-driven update after an access-rule change; not a new version."""
        if not roles:
            raise EmptyAuthorizedRoles(f"unit {uid} would lose every authorized role")
        with self._lock:
            for s in self._units.get(uid, []):
                s.unit = replace(s.unit, authorized_roles=frozenset(roles))

    # -- sources -----------------------------------------------------------

    def _find_source(self, source: str, domain: str | None) -> tuple[_Domain, str]:
        if domain is None and "/" in source:
            domain, source = source.split("/", 1)
        if domain is not None:
            dom = self._require(domain)
            if source not in dom.sources:
                raise UnknownSource(f"source {domain}/{source} is not registered")
            return dom, source
        hits = [d for d in self._domains.values() if source in d.sources]
        if len(hits) != 1:
            raise UnknownSource(f"source {source!r} is unknown or ambiguous")
        return hits[0], source

    def source_state(self, source: str, domain: str | None = None) -> SourceState:
        with self._lock:
            dom, name = self._find_source(source, domain)
            return dom.sources[name]

    def source_states(self) -> dict[str, dict[str, SourceState]]:
        with self._lock:
            return {n: dict(d.sources) for n, d in sorted(self._domains.items())}

    def record_source_result(
        self, source: str, ok: bool, now: datetime | None = None, *, domain: str | None = None
    ) -> SourceState:
        now = utc(now or self.clock.now())
        with self._lock:
            dom, name = self._find_source(source, domain)
            prev = dom.sources[name]
            if ok:
                new = SourceState(name, SourceStatus.CONNECTED, 0, now)
            else:
                failures = prev.consecutive_failures + 1
                if failures >= self.failure_threshold:
                    status = SourceStatus.DISCONNECTED
                else:
                    status = SourceStatus.DEGRADED
                new = SourceState(name, status, failures, prev.last_success)
                if status is SourceStatus.DISCONNECTED and prev.status is not SourceStatus.DISCONNECTED:
                    self._deltas.append(
                        Delta(
                            DeltaType.SOURCE_DISCONNECTED,
                            f"{dom.manifest.name}/{name}",
                            now,
                            {"consecutive_failures": failures},
                        )
                    )
            dom.sources[name] = new
            return new

    def drain_deltas(self) -> list[Delta]:
        with self._lock:
            out, self._deltas = self._deltas, []
            return out

    # -- export ------------------------------------------------------------

    def export_snapshot(self, target: str | Path | IO[str]) -> int:
        """Write every stored version as one JSON object per line."""
        with self._lock:
            rows = [s.unit.to_dict() for uid in sorted(self._units) for s in self._units[uid]]
        lines = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)
        if hasattr(target, "write"):
            target.write(lines)
        else:
            Path(target).write_text(lines, encoding="utf-8")
        return len(rows)


def load_snapshot(lines: Sequence[str] | str) -> list[dict]:
    if isinstance(lines, str):
        lines = lines.splitlines()
    return [json.loads(line) for line in lines if line.strip()]
