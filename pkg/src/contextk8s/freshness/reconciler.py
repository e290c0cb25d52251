"""The reconciliation loop.

Each cycle compares declared manifests against what the registry and the
connectors report, turns every difference into a Delta, applies exactly one
corrective action per delta and audits it. A cycle never raises: connector
and audit failures are recorded in the report instead.
"""

from __future__ import annotations

import itertools
import json
import logging
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Iterator

from ..audit import AuditLog, EventKind
from ..cxri import ChangeKind, Connection, Subscription, connect
from ..errors import ContextError, EmptyAuthorizedRoles, NotFound
from ..manifest import DomainManifest
from ..registry import Registry, SourceStatus, unit_id
from ..text import HashedTfidf
from ..timeutil import SystemClock, to_rfc3339, utc
from .state import Delta, DeltaType, FreshnessState, resolve_conflict

log = logging.getLogger(__name__)

DEFAULT_INTERVAL = 5.0


@dataclass
class CycleReport:
    cycle_id: int
    started_at: datetime
    duration_ms: float = 0.0
    deltas: list[dict] = field(default_factory=list)
    actions: list[dict] = field(default_factory=list)
    sources: list[dict] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "cycle_id": self.cycle_id,
            "started_at": to_rfc3339(self.started_at),
            "duration_ms": round(self.duration_ms, 3),
            "deltas": self.deltas,
            "actions": self.actions,
            "sources": self.sources,
            "errors": self.errors,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    def delta_types(self) -> list[str]:
        return [d["type"] for d in self.deltas]


@dataclass
class _Source:
    domain: str
    name: str
    conn: Connection | None = None
    sub: Subscription | None = None
    last_poll: datetime | None = None


class Reconciler:
    """Owns source connections and drives the registry toward declared state.

    ``declared`` is the desired set of manifests; ``apply`` replaces one of
    them and the next cycle does the rest.
    """

    def __init__(
        self,
        registry: Registry,
        *,
        audit: AuditLog | None = None,
        clock=None,
        base_dir=None,
        vectorizer: HashedTfidf | None = None,
        on_permission_change: Callable[[str], None] | None = None,
    ):
        self.registry = registry
        self.clock = clock or SystemClock()
        self.audit = audit if audit is not None else AuditLog(clock=self.clock)
        self.base_dir = base_dir
        self.vectorizer = vectorizer or HashedTfidf()
        self.on_permission_change = on_permission_change
        self.declared: dict[str, DomainManifest] = {}
        self.sources: dict[tuple[str, str], _Source] = {}
        self.reports: deque[CycleReport] = deque(maxlen=256)
        self._ids = itertools.count(1)
        self._cycle_lock = threading.Lock()
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()

    # -- declared state ----------------------------------------------------

    def apply(self, manifest: DomainManifest) -> None:
        self.declared[manifest.name] = manifest

    def bootstrap(self, manifests, now: datetime | None = None) -> CycleReport:
        """Declare ``manifests`` and run the first cycle, which ingests everything."""
        for m in manifests:
            self.apply(m)
        return self.reconcile_once(now)

    # -- connections -------------------------------------------------------

    def _connect(self, src: _Source, manifest: DomainManifest, report: CycleReport) -> bool:
        spec = manifest.source(src.name)
        try:
            src.conn = connect(
                spec,
                manifest=manifest,
                base_dir=self.base_dir,
                vectorizer=self.vectorizer,
                clock=self.clock,
            )
            src.sub = src.conn.subscribe("*")
            return True
        except ContextError as exc:
            report.errors.append(f"{src.domain}/{src.name}: {exc}")
            src.conn = None
            src.sub = None
            return False

    def connection(self, domain: str, source: str) -> Connection | None:
        src = self.sources.get((domain, source))
        return src.conn if src else None

    def ingest_source(self, domain: str, source: str, now: datetime | None = None) -> list[str]:
        """Read every path of one source into the registry. Returns unit ids stored."""
        now = utc(now or self.clock.now())
        src = self.sources[(domain, source)]
        stored = []
        for path in src.conn.list_paths():
            uid = self._sync_path(src, path, now)
            if uid:
                stored.append(uid)
        return stored

    def _sync_path(self, src: _Source, path: str, now: datetime) -> str | None:
        """Read ``path`` and store it if the content changed. Returns the unit id."""
        unit = src.conn.read(path)
        current = self.registry.get_unit(unit.id)
        if current is not None and current.content == unit.content and self.registry.live_versions(unit.id):
            self.registry.mark_verified(unit.id, now)
            return unit.id
        try:
            self.registry.upsert_unit(unit, now=now)
        except EmptyAuthorizedRoles:
            return None
        return unit.id

    # -- the cycle ---------------------------------------------------------

    def reconcile_once(self, now: datetime | None = None) -> CycleReport:
        with self._cycle_lock:
            now = utc(now or self.clock.now())
            report = CycleReport(next(self._ids), now)
            t0 = time.perf_counter()
            handled: set[str] = set()
            self._manifests(report, now)
            self._health(report, now)
            self._changes(report, now, handled)
            self._ages(report, now, handled)
            self._conflicts(report, now)
            report.duration_ms = (time.perf_counter() - t0) * 1000.0
            self.reports.append(report)
            return report

    def _record(self, report: CycleReport, delta: Delta, action: str, **detail) -> None:
        entry = {"type": delta.type.value, "target": delta.target, "detected_at": to_rfc3339(delta.detected_at)}
        entry.update({k: str(v) for k, v in delta.detail.items()})
        report.deltas.append(entry)
        act = {"target": delta.target, "action": action}
        act.update({k: str(v) for k, v in detail.items()})
        report.actions.append(act)
        try:
            self.audit.append(
                EventKind.RECONCILE_DELTA,
                outcome=action,
                domain=delta.target.split("/", 1)[0],
                detail={"type": delta.type.value, "target": delta.target, **detail},
            )
        except ContextError as exc:
            report.errors.append(f"audit: {exc}")

    # 1. declared manifests vs registered ones

    def _manifests(self, report: CycleReport, now: datetime) -> None:
        for name in sorted(self.declared):
            manifest = self.declared[name]
            if not self.registry.has_domain(name):
                self.registry.register_domain(manifest)
                report.actions.append({"target": name, "action": "register_domain"})
                self._attach_sources(manifest, report, now)
                continue
            current = self.registry.manifest(name)
            if current == manifest:
                continue
            access_changed = current.access != manifest.access
            self.registry.replace_manifest(manifest)
            self._attach_sources(manifest, report, now)
            if access_changed:
                delta = Delta(DeltaType.PERMISSION_CHANGE, name, now)
                changed = self._recompute_roles(manifest)
                if self.on_permission_change is not None:
                    self.on_permission_change(name)
                self._record(report, delta, "propagate_permissions", units=changed)
            else:
                report.actions.append({"target": name, "action": "update_manifest"})

    def _attach_sources(self, manifest: DomainManifest, report: CycleReport, now: datetime) -> None:
        wanted = {s.name for s in manifest.sources}
        for key in [k for k in self.sources if k[0] == manifest.name and k[1] not in wanted]:
            src = self.sources.pop(key)
            if src.sub is not None:
                src.sub.close()
        for spec in manifest.sources:
            key = (manifest.name, spec.name)
            src = self.sources.get(key)
            if src is not None and src.conn is not None:
                src.conn.ctx.manifest = manifest
                src.conn.spec = spec
                continue
            src = src or _Source(manifest.name, spec.name)
            self.sources[key] = src
            if self._connect(src, manifest, report):
                try:
                    ids = self.ingest_source(manifest.name, spec.name, now)
                    report.actions.append({"target": f"{manifest.name}/{spec.name}", "action": "ingest", "units": str(len(ids))})
                except ContextError as exc:
                    report.errors.append(f"{manifest.name}/{spec.name}: {exc}")

    def _recompute_roles(self, manifest: DomainManifest) -> int:
        changed = 0
        for uid in self.registry.unit_ids(manifest.name):
            unit = self.registry.get_unit(uid)
            roles = manifest.access.readers_of(unit.metadata.path)
            if roles == unit.authorized_roles:
                continue
            changed += 1
            if roles:
                self.registry.set_authorized_roles(uid, roles)
            else:
                self.registry.archive(uid, reason="no_readers")
        return changed

    # 2. source health

    def _probe(self, src: _Source, now: datetime):
        """Probe up to failure_threshold times; stop at the first success."""
        status = None
        for _ in range(self.registry.failure_threshold):
            status = src.conn.health() if src.conn is not None else None
            ok = status is not None and status.ok
            state = self.registry.record_source_result(src.name, ok, now, domain=src.domain)
            if ok or state.status is SourceStatus.DISCONNECTED:
                return status, state
        return status, state

    def _health(self, report: CycleReport, now: datetime) -> None:
        for (domain, name), src in sorted(self.sources.items()):
            before = self.registry.source_state(name, domain).status
            reconnected = False
            if src.conn is None:
                # Never connected (or dropped): try again; the probe below records the outcome.
                reconnected = self._connect(src, self.registry.manifest(domain), report)
            status, state = self._probe(src, now)
            report.sources.append(
                {
                    "source": f"{domain}/{name}",
                    "status": state.status.value,
                    "consecutive_failures": state.consecutive_failures,
                    "latency_ms": round(status.latency_ms, 3) if status else None,
                }
            )
            if state.status is SourceStatus.CONNECTED and (reconnected or before is SourceStatus.DISCONNECTED):
                self._recover(src, report, now)
        for delta in self.registry.drain_deltas():
            if delta.type is not DeltaType.SOURCE_DISCONNECTED:
                continue
            domain, name = delta.target.split("/", 1)
            dependents = self.registry.mark_source_stale(domain, name)
            src = self.sources.get((domain, name))
            if src is not None and src.sub is not None:
                src.sub.close()
                src.sub = None
            try:
                self.audit.append(
                    EventKind.SOURCE_STATE_CHANGE,
                    outcome="disconnected",
                    domain=domain,
                    detail={"source": delta.target, "alert": "true"},
                )
            except ContextError as exc:
                report.errors.append(f"audit: {exc}")
            self._record(report, delta, "mark_dependents_stale", units=len(dependents))

    def _recover(self, src: _Source, report: CycleReport, now: datetime) -> None:
        manifest = self.registry.manifest(src.domain)
        try:
            self.audit.append(
                EventKind.SOURCE_STATE_CHANGE,
                outcome="connected",
                domain=src.domain,
                detail={"source": f"{src.domain}/{src.name}"},
            )
        except ContextError as exc:
            report.errors.append(f"audit: {exc}")
        if src.conn is None or not src.conn.alive or src.sub is None:
            if not self._connect(src, manifest, report):
                return
        try:
            paths = set(src.conn.list_paths())
            for path in sorted(paths):
                self._sync_path(src, path, now)
            for uid in self.registry.unit_ids(src.domain):
                unit = self.registry.get_unit(uid)
                if unit.metadata.source == src.name and unit.metadata.path not in paths and self.registry.live_versions(uid):
                    self.registry.archive(uid, reason="source_deleted")
            report.actions.append({"target": f"{src.domain}/{src.name}", "action": "resync_source"})
        except ContextError as exc:
            report.errors.append(f"{src.domain}/{src.name}: {exc}")

    # 3. upstream change notifications

    def _due(self, src: _Source, now: datetime) -> bool:
        spec = self.registry.manifest(src.domain).source(src.name)
        if spec is None or spec.realtime or src.last_poll is None:
            return True
        return now - src.last_poll >= spec.refresh

    def _changes(self, report: CycleReport, now: datetime, handled: set[str]) -> None:
        for (domain, name), src in sorted(self.sources.items()):
            if src.sub is None or self.registry.source_state(name, domain).status is SourceStatus.DISCONNECTED:
                continue
            if not self._due(src, now):
                continue
            try:
                events = src.sub.poll()
            except ContextError as exc:
                report.errors.append(f"{domain}/{name}: {exc}")
                src.sub = None
                continue
            src.last_poll = now
            for ev in events:
                uid = unit_id(domain, name, ev.path)
                handled.add(uid)
                try:
                    self._apply_change(src, uid, ev.path, ev.kind, report, now)
                except ContextError as exc:
                    report.errors.append(f"{uid}: {exc}")

    def _apply_change(self, src, uid, path, kind, report, now) -> None:
        if kind is ChangeKind.CREATED and not self.registry.live_versions(uid):
            stored = self._sync_path(src, path, now)
            report.actions.append({"target": uid, "action": "ingest" if stored else "skip_unreadable"})
            return
        delta = Delta(DeltaType.CONTEXT_STALE, uid, now, {"cause": kind.value})
        if kind is ChangeKind.DELETED:
            n = self.registry.archive(uid, reason="source_deleted")
            self._record(report, delta, "archive", versions=n)
            return
        self._stale_action(src, uid, delta, report, now)

    def _stale_action(self, src, uid: str, delta: Delta, report: CycleReport, now: datetime) -> None:
        unit = self.registry.get_unit(uid)
        policy = self.registry.manifest(src.domain).freshness.policy_for(unit.metadata.path)
        action = policy.stale_action
        if action == "re-sync":
            try:
                self._sync_path(src, unit.metadata.path, now)
                self._record(report, delta, "re-sync")
            except NotFound:
                n = self.registry.archive(uid, reason="source_deleted")
                self._record(report, delta, "archive", versions=n)
        elif action == "flag":
            self.registry.flag(uid)
            self._record(report, delta, "flag")
        else:
            n = self.registry.archive(uid, reason="stale")
            self._record(report, delta, "archive", versions=n)

    # 4. age-based staleness

    def _ages(self, report: CycleReport, now: datetime, handled: set[str]) -> None:
        for domain in self.registry.list_domains():
            seen = set()
            for view in self.registry.views(domain, now):
                uid = view.unit.id
                if uid in handled or uid in seen:
                    continue
                seen.add(uid)
                if view.state not in (FreshnessState.STALE, FreshnessState.EXPIRED) or view.flagged:
                    continue
                m = view.unit.metadata
                src = self.sources.get((domain, m.source))
                if src is None or src.conn is None:
                    continue
                if self.registry.source_state(m.source, domain).status is SourceStatus.DISCONNECTED:
                    # Dependents of a dark source stay stale until it recovers.
                    continue
                delta = Delta(DeltaType.CONTEXT_STALE, uid, now, {"cause": view.state.value})
                try:
                    self._stale_action(src, uid, delta, report, now)
                except ContextError as exc:
                    report.errors.append(f"{uid}: {exc}")

    # 5. conflicting live versions

    def _conflicts(self, report: CycleReport, now: datetime) -> None:
        for uid in self.registry.unit_ids():
            live = self.registry.live_versions(uid)
            if len(live) < 2:
                continue
            winner = resolve_conflict(live)
            for u in live:
                if u.version != winner.version:
                    self.registry.archive(uid, u.version, reason="superseded")
            report.actions.append({"target": uid, "action": "resolve_conflict", "winner": str(winner.version)})
            try:
                self.audit.append(
                    EventKind.RECONCILE_DELTA,
                    outcome="resolve_conflict",
                    domain=winner.metadata.domain,
                    detail={"target": uid, "winner": winner.version},
                )
            except ContextError as exc:
                report.errors.append(f"audit: {exc}")

    # -- loop --------------------------------------------------------------

    def iter_cycles(self, interval: float, stop: threading.Event) -> Iterator[CycleReport]:
        if interval <= 0:
            raise ValueError("interval must be positive")
        while not stop.is_set():
            try:
                yield self.reconcile_once()
            except Exception:  # a broken cycle must not kill the loop
                log.exception("reconciliation cycle failed")
            if stop.wait(interval):
                break

    def start(self, interval: float = DEFAULT_INTERVAL, on_report: Callable[[CycleReport], None] | None = None) -> None:
        if self._thread is not None and self._thread.is_alive():
            raise RuntimeError("reconciliation loop already running")
        self._stop.clear()

        def run():
            for report in self.iter_cycles(interval, self._stop):
                if on_report is not None:
                    on_report(report)

        self._thread = threading.Thread(target=run, name="reconciler", daemon=True)
        self._thread.start()

    def stop(self, timeout: float | None = 10.0) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout)
            self._thread = None

    @property
    def running(self) -> bool:
        return self._thread is not None and self._thread.is_alive()
