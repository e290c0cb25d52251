"""Declarative context orchestration for AI agents.

Domains are declared as manifests; a registry holds the knowledge units; a
permission engine confines agents to strict subsets of their users' roles;
a reconciliation loop keeps units fresh; a router delivers them by intent
under a token budget; and every step lands in an append-only audit log.
"""

from .audit import AuditEvent, AuditLog, EventKind, JsonlBackend, MemoryBackend
from .control_plane import ControlPlane, Org, OrgUser
from .errors import ContextError
from .freshness import FreshnessState, freshness_state, resolve_conflict
from .freshness.reconciler import CycleReport, Reconciler
from .manifest import DomainManifest, load_manifests, parse_manifest, serialize, validate_cross_references
from .permissions import (
    AgentProfile,
    Channel,
    KillScope,
    PermissionEngine,
    Session,
    UserRole,
)
from .registry import ContextUnit, Registry
from .router import Router, apply_token_budget, classify_intent, load_taxonomy, rank
from .tiers import Tier
from .timeutil import ManualClock, SystemClock

__version__ = "0.1.0"

__all__ = [
    "AgentProfile",
    "AuditEvent",
    "AuditLog",
    "Channel",
    "ContextError",
    "ContextUnit",
    "ControlPlane",
    "CycleReport",
    "DomainManifest",
    "EventKind",
    "FreshnessState",
    "JsonlBackend",
    "KillScope",
    "ManualClock",
    "MemoryBackend",
    "Org",
    "OrgUser",
    "PermissionEngine",
    "Reconciler",
    "Registry",
    "Router",
    "Session",
    "SystemClock",
    "Tier",
    "UserRole",
    "apply_token_budget",
    "classify_intent",
    "freshness_state",
    "load_manifests",
    "load_taxonomy",
    "parse_manifest",
    "rank",
    "resolve_conflict",
    "serialize",
    "validate_cross_references",
]
