"""Wiring: one registry, audit log, permission engine, reconciler and router."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .audit import AuditLog
from .errors import UnknownRole, WriteFailed
from .freshness.reconciler import CycleReport, Reconciler
from .manifest import DomainManifest, load_manifests
from .permissions import (
    AgentProfile,
    PermissionEngine,
    Session,
    derive_agent_profile,
    derive_user_role,
    rbac_profile,
)
from .registry import Registry
from .router import Router, Taxonomy, load_taxonomy
from .text import HashedTfidf
from .timeutil import SystemClock, to_rfc3339


@dataclass(frozen=True)
class OrgUser:
    name: str
    role: str
    domain: str
    assigned: tuple[str, ...] = ()


@dataclass
class Org:
    users: dict[str, OrgUser] = field(default_factory=dict)
    entities: tuple[str, ...] = ()

    @classmethod
    def from_dict(cls, data: Mapping) -> "Org":
        users = {
            u["name"]: OrgUser(u["name"], u["role"], u["domain"], tuple(u.get("assigned", ())))
            for u in data.get("users", [])
        }
        return cls(users, tuple(data.get("entities", ())))

    @classmethod
    def load(cls, path: str | Path) -> "Org":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def user(self, name: str) -> OrgUser:
        try:
            return self.users[name]
        except KeyError:
            raise UnknownRole(f"user {name!r} is not in the organisation") from None


def home_domain(manifests: Iterable[DomainManifest], role: str) -> str:
    """The domain a role belongs to: the first one granting it write access, else the first declaring it."""
    declared = [m for m in manifests if m.access.role(role) is not None]
    if not declared:
        raise UnknownRole(f"role {role!r} is not declared in any manifest")
    for m in declared:
        if m.access.role(role).write:
            return m.name
    return declared[0].name


class ControlPlane:
    """A complete in-process deployment.

    ``mode`` picks the agent model: ``"full"`` derives strict-subset
    profiles from ``agentPermissions``; ``"rbac"`` lets agents inherit
    their user's role with every operation autonomous.
    """

    def __init__(
        self,
        manifests: Iterable[DomainManifest],
        *,
        base_dir=None,
        clock=None,
        audit: AuditLog | None = None,
        mode: str = "full",
        taxonomy: Taxonomy | None = None,
        org: Org | None = None,
        vectorizer: HashedTfidf | None = None,
        router_options: Mapping | None = None,
    ):
        self.clock = clock or SystemClock()
        self.audit = audit if audit is not None else AuditLog(clock=self.clock)
        self.mode = mode
        self.org = org or Org()
        self.vectorizer = vectorizer or HashedTfidf()
        self.registry = Registry(clock=self.clock)
        self.engine = PermissionEngine(self._manifest, audit=self.audit, clock=self.clock, mode=mode)
        self.reconciler = Reconciler(
            self.registry,
            audit=self.audit,
            clock=self.clock,
            base_dir=base_dir,
            vectorizer=self.vectorizer,
        )
        self.router = Router(
            self.registry,
            self.engine,
            taxonomy or load_taxonomy(),
            vectorizer=self.vectorizer,
            clock=self.clock,
            known_entities=self.org.entities,
            **dict(router_options or {}),
        )
        self.engine.executors["write"] = self._execute_write
        for m in manifests:
            self.reconciler.apply(m)

    @classmethod
    def from_directory(cls, root: str | Path, **kwargs) -> "ControlPlane":
        """Load a seed tree: ``manifests/``, ``taxonomy.json``, ``org.json``, data under ``root``."""
        root = Path(root)
        manifests = load_manifests(root / "manifests")
        if (root / "taxonomy.json").exists():
            kwargs.setdefault("taxonomy", load_taxonomy(root / "taxonomy.json"))
        if (root / "org.json").exists():
            kwargs.setdefault("org", Org.load(root / "org.json"))
        return cls(manifests, base_dir=root, **kwargs)

    # -- lifecycle ---------------------------------------------------------

    def _manifest(self, domain: str) -> DomainManifest:
        return self.registry.manifest(domain)

    def bootstrap(self) -> CycleReport:
        return self.reconciler.reconcile_once()

    def reconcile(self) -> CycleReport:
        return self.reconciler.reconcile_once()

    def apply(self, manifest: DomainManifest) -> None:
        self.reconciler.apply(manifest)

    def declared(self) -> list[DomainManifest]:
        return [self.reconciler.declared[n] for n in sorted(self.reconciler.declared)]

    # -- agents and sessions -----------------------------------------------

    def agent_id_for(self, user: str, role: str) -> str:
        return f"agent-{user}-{role}"

    def ensure_agent(self, user: str, role: str, domain: str | None = None, agent_id: str | None = None) -> AgentProfile:
        agent_id = agent_id or self.agent_id_for(user, role)
        try:
            return self.engine.profile(agent_id)
        except Exception:
            pass
        domain = domain or home_domain(self.registry.manifests(), role)
        manifest = self.registry.manifest(domain)
        build = derive_agent_profile if self.mode == "full" else rbac_profile
        profile = build(manifest, role, user, agent_id)
        return self.engine.register_agent_profile(profile, derive_user_role(manifest, role))

    def open_session(
        self,
        user: str,
        *,
        role: str | None = None,
        domain: str | None = None,
        assigned: Iterable[str] | None = None,
        agent_id: str | None = None,
    ) -> Session:
        known = self.org.users.get(user)
        role = role or (known.role if known else None)
        if role is None:
            raise UnknownRole(f"no role given for user {user!r}")
        if known is not None and known.role == role:
            domain = domain or known.domain
            if assigned is None:
                assigned = known.assigned
        profile = self.ensure_agent(user, role, domain, agent_id)
        return self.engine.create_session(profile.agent_id, assigned=assigned or ())

    def route(self, session_id: str, query: str, **kw):
        return self.router.route(session_id, query, **kw)

    # -- side effects ------------------------------------------------------

    def _execute_write(self, session: Session, payload: Mapping) -> dict:
        domain = str(payload.get("domain", session.domain))
        manifest = self.registry.manifest(domain)
        source = payload.get("source") or manifest.sources[0].name
        conn = self.reconciler.connection(domain, source)
        if conn is None:
            raise WriteFailed(f"source {domain}/{source} is not connected")
        result = conn.write(str(payload["path"]), str(payload.get("content", "")))
        return {"path": result.path, "version": result.new_version}

    def health(self) -> dict:
        states = self.registry.source_states()
        return {
            "status": "ok" if self.engine.available else "degraded",
            "domains": self.registry.list_domains(),
            "permission_engine": "available" if self.engine.available else "unavailable",
            "reconciler": "running" if self.reconciler.running else "manual",
            "sources": {
                d: {
                    name: {
                        "status": s.status.value,
                        "consecutive_failures": s.consecutive_failures,
                        "last_success": to_rfc3339(s.last_success) if s.last_success else None,
                    }
                    for name, s in srcs.items()
                }
                for d, srcs in states.items()
            },
        }
