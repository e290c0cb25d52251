"""The Permission Engine.

Agents act through profiles that are strict subsets of their user's role:
fewer operations and approval tiers at least as restrictive. Actions are
executed, parked for approval, or refused depending on their tier. Tier-3
one-time codes go only to the out-of-band channel object, which the agent
surface never touches.
"""

from __future__ import annotations

import enum
import hashlib
import hmac
import json
import secrets
import string
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from typing import Any, Callable, Iterable, Mapping

from .audit import AuditLog, EventKind
from .errors import (
    ApprovalError,
    EqualSetViolation,
    Expired,
    NotPending,
    PermissionEngineUnavailable,
    Replay,
    SessionKilled,
    SupersetViolation,
    TierViolation,
    UnknownAgent,
    UnknownApproval,
    UnknownRole,
    UnknownSession,
    WrongChannel,
    WrongOtp,
    WrongTier,
)
from .globs import any_match, first_match
from .manifest import DomainManifest
from .registry import ContextUnit
from .tiers import Tier
from .timeutil import SystemClock, to_rfc3339, utc

OTP_TTL = timedelta(seconds=300)
OTP_DIGITS = 6

READ = "read"
WRITE = "write"

_ID_ALPHABET = string.ascii_lowercase


def new_id(prefix: str) -> str:
    # Letters only: identifiers can never contain a digit run that looks like an OTP.
    return prefix + "".join(secrets.choice(_ID_ALPHABET) for _ in range(20))


_HEX_TO_LETTERS = str.maketrans("0123456789", "ghijklmnop")


def letter_digest(data: bytes, length: int = 64) -> str:
    """SHA-256 spelled with letters only, so it can never contain an OTP."""
    return hashlib.sha256(data).hexdigest()[:length].translate(_HEX_TO_LETTERS)


def payload_digest(payload: Mapping[str, Any] | None) -> str:
    return letter_digest(json.dumps(payload or {}, sort_keys=True, default=str).encode("utf-8"))


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UserRole:
    role: str
    domain: str
    read_paths: tuple[str, ...] = ()
    write_paths: tuple[str, ...] = ()
    operations: frozenset[str] = frozenset()
    tier_of: Mapping[str, Tier] = field(default_factory=dict)

    def tier(self, operation: str) -> Tier:
        # Humans act autonomously unless a tier is configured.
        return self.tier_of.get(operation, Tier.AUTONOMOUS)


@dataclass(frozen=True)
class AgentProfile:
    agent_id: str
    user: str
    role: str
    domain: str
    operations: frozenset[str]
    tier_of: Mapping[str, Tier]
    excluded: frozenset[str] = frozenset()
    write_paths: tuple[tuple[str, Tier], ...] = ()

    def tier(self, operation: str) -> Tier:
        return self.tier_of.get(operation, Tier.EXCLUDED)


class SessionState(str, enum.Enum):
    LIVE = "live"
    KILLED = "killed"


@dataclass(frozen=True)
class SessionScope:
    assigned: tuple[str, ...] = ()
    last_entity: str | None = None


@dataclass(frozen=True)
class Session:
    session_id: str
    agent_id: str
    user: str
    role: str
    domain: str
    scope: SessionScope
    state: SessionState
    created_at: datetime
    token: str = field(default="", repr=False, compare=False)

    @property
    def live(self) -> bool:
        return self.state is SessionState.LIVE


class ApprovalState(str, enum.Enum):
    PENDING = "pending"
    APPROVED = "approved"
    REJECTED = "rejected"
    EXPIRED = "expired"
    CONSUMED = "consumed"


@dataclass
class PendingApproval:
    approval_id: str
    session_id: str
    operation: str
    payload_digest: str
    tier: Tier
    issued_at: datetime
    expires_at: datetime | None
    state: ApprovalState = ApprovalState.PENDING
    attempts: int = 0
    payload: Mapping[str, Any] = field(default_factory=dict, repr=False)
    otp: str | None = field(default=None, repr=False)
    executions: int = 0

    def public(self) -> dict:
        """The agent-visible view: status only, never the code."""
        return {
            "approval_id": self.approval_id,
            "session_id": self.session_id,
            "operation": self.operation,
            "payload_digest": self.payload_digest,
            "tier": self.tier.value,
            "state": self.state.value,
            "issued_at": to_rfc3339(self.issued_at),
            "expires_at": to_rfc3339(self.expires_at) if self.expires_at else None,
        }


class Channel(str, enum.Enum):
    AGENT = "agent"
    OUT_OF_BAND = "out_of_band"


@dataclass(frozen=True)
class OtpDelivery:
    approval_id: str
    otp: str
    issued_at: datetime

    def to_dict(self) -> dict:
        return {"approval_id": self.approval_id, "otp": self.otp, "issued_at": to_rfc3339(self.issued_at)}


class OutOfBandChannel:
    """Stand-in for the user's second-factor device.

    Only admin-side code holds a reference to this object.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._records: list[OtpDelivery] = []

    def deliver(self, record: OtpDelivery) -> None:
        with self._lock:
            self._records.append(record)

    def code_for(self, approval_id: str) -> str | None:
        with self._lock:
            for r in reversed(self._records):
                if r.approval_id == approval_id:
                    return r.otp
        return None

    def records(self) -> list[OtpDelivery]:
        with self._lock:
            return list(self._records)


@dataclass(frozen=True)
class Decision:
    allowed: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.allowed


ALLOW = Decision(True, "allowed")


def Deny(reason: str) -> Decision:
    return Decision(False, reason)


class ActionStatus(str, enum.Enum):
    EXECUTED = "executed"
    PENDING = "pending"
    REFUSED = "refused"


@dataclass(frozen=True)
class ActionResult:
    status: ActionStatus
    operation: str
    tier: Tier | None = None
    approval_id: str | None = None
    reason: str = ""
    result: Any = None

    def to_dict(self) -> dict:
        out = {"status": self.status.value, "operation": self.operation}
        if self.tier is not None:
            out["tier"] = self.tier.value
        if self.approval_id:
            out["approval_id"] = self.approval_id
        if self.reason:
            out["reason"] = self.reason
        if self.result is not None:
            out["result"] = self.result
        return out


@dataclass(frozen=True)
class Resolution:
    approval_id: str
    state: ApprovalState
    executed: bool
    result: Any = None


@dataclass(frozen=True)
class KillScope:
    kind: str  # "session" | "user" | "global"
    id: str | None = None

    @classmethod
    def session(cls, session_id: str) -> "KillScope":
        return cls("session", session_id)

    @classmethod
    def user(cls, user: str) -> "KillScope":
        return cls("user", user)

    @classmethod
    def all(cls) -> "KillScope":
        return cls("global")


@dataclass(frozen=True)
class SideEffect:
    operation: str
    session_id: str
    payload: Mapping[str, Any]
    at: datetime


# ---------------------------------------------------------------------------
# Derivation from manifests
# ---------------------------------------------------------------------------


def role_operations(manifest: DomainManifest, role: str) -> frozenset[str]:
    rule = manifest.access.role(role)
    if rule is None:
        raise UnknownRole(f"role {role!r} not declared in domain {manifest.name!r}")
    ops = {READ} if rule.read else set()
    if rule.write:
        ops.add(WRITE)
    declared = rule.operations
    if declared is None:
        declared = tuple(op for op, _ in manifest.access.agent_permissions.execute)
    ops.update(declared)
    return frozenset(ops)


def derive_user_role(manifest: DomainManifest, role: str) -> UserRole:
    rule = manifest.access.role(role)
    if rule is None:
        raise UnknownRole(f"role {role!r} not declared in domain {manifest.name!r}")
    return UserRole(
        role=role,
        domain=manifest.name,
        read_paths=rule.read,
        write_paths=rule.write,
        operations=role_operations(manifest, role),
    )


def derive_agent_profile(manifest: DomainManifest, role: str, user: str, agent_id: str) -> AgentProfile:
    """The agent profile a manifest's agentPermissions imply for ``role``."""
    user_role = derive_user_role(manifest, role)
    ap = manifest.access.agent_permissions
    tier_of: dict[str, Tier] = {}
    for op in user_role.operations:
        if op == READ:
            tier_of[op] = ap.read
        elif op == WRITE:
            tier_of[op] = ap.write.default
        else:
            tier = ap.execute_tier(op)
            tier_of[op] = Tier.EXCLUDED if tier is None else tier
    excluded = frozenset(op for op, t in tier_of.items() if t is Tier.EXCLUDED)
    ops = frozenset(user_role.operations - excluded)
    return AgentProfile(
        agent_id=agent_id,
        user=user,
        role=role,
        domain=manifest.name,
        operations=ops,
        tier_of={op: t for op, t in tier_of.items() if op in ops},
        excluded=excluded,
        write_paths=ap.write.paths,
    )


def rbac_profile(manifest: DomainManifest, role: str, user: str, agent_id: str) -> AgentProfile:
    """Agent that inherits its user's role verbatim with every operation autonomous."""
    user_role = derive_user_role(manifest, role)
    return AgentProfile(
        agent_id=agent_id,
        user=user,
        role=role,
        domain=manifest.name,
        operations=user_role.operations,
        tier_of={op: Tier.AUTONOMOUS for op in user_role.operations},
    )


def check_subset(profile: AgentProfile, role: UserRole) -> None:
    """Raise unless the profile is a strict, no-less-restrictive subset of the role."""
    extra = profile.operations - role.operations
    if extra:
        raise SupersetViolation(f"agent {profile.agent_id} requests operations outside role {role.role}: {sorted(extra)}")
    if profile.operations == role.operations:
        raise EqualSetViolation(f"agent {profile.agent_id} holds every operation of role {role.role}; inclusion must be strict")
    for op in sorted(profile.operations):
        if profile.tier(op) < role.tier(op):
            raise TierViolation(
                f"agent tier {profile.tier(op).value} for {op} is less restrictive than user tier {role.tier(op).value}"
            )
    if WRITE in profile.operations:
        for glob, tier in profile.write_paths:
            if tier < role.tier(WRITE):
                raise TierViolation(f"write tier {tier.value} on {glob} is less restrictive than user tier")


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------


class PermissionEngine:
    """Profiles, sessions, approvals and kill switches.

    ``manifests`` maps a domain name to its current manifest; it is consulted
    at check time so access-rule changes reach live sessions immediately.
    ``mode="rbac"`` skips the strict-subset check at registration, which is
    how the role-inheriting baseline is built.
    """

    def __init__(
        self,
        manifests: Callable[[str], DomainManifest] | Mapping[str, DomainManifest],
        *,
        audit: AuditLog | None = None,
        clock=None,
        mode: str = "full",
        otp_ttl: timedelta = OTP_TTL,
        out_of_band: OutOfBandChannel | None = None,
    ):
        if mode not in ("full", "rbac"):
            raise ValueError(f"unknown engine mode {mode!r}")
        if isinstance(manifests, Mapping):
            table = manifests
            manifests = lambda name: table[name]  # noqa: E731
        self._manifest = manifests
        self.audit = audit if audit is not None else AuditLog(clock=clock)
        self.clock = clock or SystemClock()
        self.mode = mode
        self.otp_ttl = otp_ttl
        self.out_of_band = out_of_band or OutOfBandChannel()
        self.available = True
        self.global_killed = False
        self.executors: dict[str, Callable[[Session, Mapping[str, Any]], Any]] = {}
        self.side_effects: list[SideEffect] = []
        self._lock = threading.RLock()
        self._profiles: dict[str, AgentProfile] = {}
        self._sessions: dict[str, Session] = {}
        self._tokens: dict[str, str] = {}
        self._approvals: dict[str, PendingApproval] = {}

    # -- helpers -----------------------------------------------------------

    def manifest(self, domain: str) -> DomainManifest | None:
        try:
            return self._manifest(domain)
        except Exception:
            return None

    def set_available(self, flag: bool) -> None:
        self.available = bool(flag)

    def _now(self, now: datetime | None) -> datetime:
        return utc(now or self.clock.now())

    def _audit(self, kind: EventKind, session: Session | None = None, outcome: str = "", **detail) -> int:
        return self.audit.append(
            kind,
            outcome=outcome,
            session_id=session.session_id if session else None,
            user=session.user if session else None,
            agent_id=session.agent_id if session else None,
            domain=session.domain if session else None,
            detail=detail,
        )

    # -- registration ------------------------------------------------------

    def register_agent_profile(self, profile: AgentProfile, role: UserRole) -> AgentProfile:
        if role.role != profile.role:
            raise UnknownRole(f"profile role {profile.role!r} does not match {role.role!r}")
        if self.mode == "full":
            check_subset(profile, role)
        with self._lock:
            self._profiles[profile.agent_id] = profile
        return profile

    def profile(self, agent_id: str) -> AgentProfile:
        with self._lock:
            try:
                return self._profiles[agent_id]
            except KeyError:
                raise UnknownAgent(f"agent {agent_id!r} is not registered") from None

    def profiles(self) -> list[AgentProfile]:
        with self._lock:
            return list(self._profiles.values())

    # -- sessions ----------------------------------------------------------

    def create_session(
        self,
        agent_id: str,
        *,
        assigned: Iterable[str] = (),
        user: str | None = None,
        role: str | None = None,
        now: datetime | None = None,
    ) -> Session:
        profile = self.profile(agent_id)
        if user is not None and user != profile.user:
            raise UnknownAgent(f"agent {agent_id} does not act for user {user}")
        if role is not None and role != profile.role:
            raise UnknownRole(f"agent {agent_id} is registered for role {profile.role}, not {role}")
        with self._lock:
            if self.global_killed:
                raise SessionKilled("global kill switch engaged")
            session = Session(
                session_id=new_id("ses-"),
                agent_id=agent_id,
                user=profile.user,
                role=profile.role,
                domain=profile.domain,
                scope=SessionScope(tuple(assigned)),
                state=SessionState.LIVE,
                created_at=self._now(now),
                token=new_id("tok-"),
            )
            self._audit(EventKind.SESSION_CREATED, session, "created")
            self._sessions[session.session_id] = session
            self._tokens[session.token] = session.session_id
            return session

    def session(self, session_id: str) -> Session:
        with self._lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSession(f"session {session_id!r} not found") from None

    def session_for_token(self, token: str) -> Session:
        with self._lock:
            sid = self._tokens.get(token)
            if sid is None:
                raise UnknownSession("invalid session token")
            return self._sessions[sid]

    def sessions(self) -> list[Session]:
        with self._lock:
            return list(self._sessions.values())

    def update_scope(self, session_id: str, *, assigned: Iterable[str] | None = None, last_entity: str | None = None) -> Session:
        with self._lock:
            s = self.session(session_id)
            scope = s.scope
            if assigned is not None:
                scope = replace(scope, assigned=tuple(assigned))
            if last_entity is not None:
                scope = replace(scope, last_entity=last_entity)
            s = replace(s, scope=scope)
            self._sessions[session_id] = s
            return s

    def end_session(self, session_id: str) -> Session:
        with self._lock:
            s = self.session(session_id)
            if s.live:
                self._kill(s, "ended")
            return self._sessions[session_id]

    def _kill(self, s: Session, outcome: str) -> None:
        # State first: a kill must hold even if the audit write then fails.
        self._sessions[s.session_id] = replace(s, state=SessionState.KILLED)
        dropped = []
        for a in self._approvals.values():
            if a.session_id == s.session_id and a.state is ApprovalState.PENDING:
                a.state = ApprovalState.REJECTED
                dropped.append(a.approval_id)
        self._audit(EventKind.SESSION_KILLED, s, outcome)
        for approval_id in dropped:
            self._audit(EventKind.APPROVAL_REJECTED, s, "session_killed", approval_id=approval_id)

    def kill_switch(self, scope: KillScope) -> int:
        with self._lock:
            if scope.kind == "global":
                self.global_killed = True
                targets = [s for s in self._sessions.values() if s.live]
            elif scope.kind == "user":
                targets = [s for s in self._sessions.values() if s.live and s.user == scope.id]
            elif scope.kind == "session":
                s = self._sessions.get(scope.id)
                targets = [s] if s is not None and s.live else []
            else:
                raise ValueError(f"unknown kill scope {scope.kind!r}")
            for s in targets:
                self._kill(s, f"kill_switch:{scope.kind}")
            if not targets:
                self._audit(EventKind.SESSION_KILLED, None, f"kill_switch:{scope.kind}", target=scope.id or "*", count=0)
            return len(targets)

    def lift_global_kill(self) -> None:
        with self._lock:
            self.global_killed = False

    # -- access checks -----------------------------------------------------

    def allowed_domains(self, session: Session) -> frozenset[str]:
        home = self.manifest(session.domain)
        if home is None:
            return frozenset()
        return frozenset((session.domain, *home.access.brokered))

    def check_path(self, session: Session, op: str, domain: str, path: str) -> Decision:
        """Path-level part of an access check (no unit needed, e.g. new files)."""
        if not self.available:
            return Deny("fail_closed")
        current = self._sessions.get(session.session_id, session)
        if not current.live:
            return Deny("killed")
        try:
            profile = self.profile(current.agent_id)
        except UnknownAgent:
            return Deny("unknown_agent")
        if op not in profile.operations:
            return Deny("operation")
        if domain not in self.allowed_domains(current):
            return Deny("cross_domain")
        manifest = self.manifest(domain)
        if manifest is None:
            return Deny("unknown_domain")
        rule = manifest.access.role(current.role)
        if rule is None:
            return Deny("role")
        globs = rule.read if op == READ else rule.write
        if not any_match(globs, path, assigned=current.scope.assigned):
            return Deny("path")
        return ALLOW

    def check_access(self, session: Session, op: str, unit: ContextUnit) -> Decision:
        if op not in (READ, WRITE):
            return Deny("operation")
        if not self.available:
            return Deny("fail_closed")
        if session.role not in unit.authorized_roles:
            current = self._sessions.get(session.session_id, session)
            if not current.live:
                return Deny("killed")
            return Deny("role")
        return self.check_path(session, op, unit.metadata.domain, unit.metadata.path)

    # -- actions -----------------------------------------------------------

    def classify_action(self, session: Session, operation: str, payload: Mapping[str, Any] | None = None) -> Tier:
        current = self.session(session.session_id)
        if not current.live:
            raise SessionKilled(f"session {current.session_id} is killed")
        profile = self.profile(current.agent_id)
        if operation not in profile.operations:
            return Tier.EXCLUDED
        if operation == WRITE:
            path = str((payload or {}).get("path", ""))
            hit = first_match([g for g, _ in profile.write_paths], path, assigned=None)
            if hit is not None:
                return dict(profile.write_paths)[hit]
        return profile.tier(operation)

    def _execute(self, session: Session, operation: str, payload: Mapping[str, Any]) -> Any:
        executor = self.executors.get(operation)
        result = executor(session, payload) if executor else None
        self.side_effects.append(SideEffect(operation, session.session_id, dict(payload), self.clock.now()))
        return result

    def submit_action(
        self,
        session_id: str,
        operation: str,
        payload: Mapping[str, Any] | None = None,
        *,
        now: datetime | None = None,
    ) -> ActionResult:
        payload = dict(payload or {})
        now = self._now(now)
        with self._lock:
            session = self.session(session_id)

            def refuse(reason: str, tier: Tier | None = None) -> ActionResult:
                self._audit(EventKind.ACTION_SUBMITTED, session, f"refused:{reason}", operation=operation)
                return ActionResult(ActionStatus.REFUSED, operation, tier, reason=reason)

            if not session.live:
                return refuse("killed")
            if not self.available:
                return refuse("fail_closed")
            profile = self.profile(session.agent_id)
            if operation not in profile.operations:
                return refuse("excluded" if operation in profile.excluded else "not_permitted", Tier.EXCLUDED)
            if operation in (READ, WRITE):
                domain = str(payload.get("domain", session.domain))
                decision = self.check_path(session, operation, domain, str(payload.get("path", "")))
                if not decision:
                    return refuse(decision.reason)
            tier = self.classify_action(session, operation, payload)
            if tier is Tier.EXCLUDED:
                return refuse("excluded", tier)
            if tier is Tier.AUTONOMOUS:
                self._audit(EventKind.ACTION_SUBMITTED, session, "accepted", operation=operation, tier=tier.value)
                result = self._execute(session, operation, payload)
                self._audit(EventKind.ACTION_EXECUTED, session, "executed", operation=operation, tier=tier.value)
                return ActionResult(ActionStatus.EXECUTED, operation, tier, result=result)

            approval = PendingApproval(
                approval_id=new_id("apr-"),
                session_id=session.session_id,
                operation=operation,
                payload_digest=payload_digest(payload),
                tier=tier,
                issued_at=now,
                expires_at=now + self.otp_ttl if tier is Tier.STRONG_APPROVAL else None,
                payload=payload,
            )
            self._audit(EventKind.ACTION_SUBMITTED, session, "pending", operation=operation, tier=tier.value)
            self._audit(
                EventKind.APPROVAL_REQUESTED, session, "pending", approval_id=approval.approval_id, tier=tier.value
            )
            if tier is Tier.STRONG_APPROVAL:
                otp = f"{secrets.randbelow(10 ** OTP_DIGITS):0{OTP_DIGITS}d}"
                approval.otp = otp
                self.audit.add_secret(otp)
                self._audit(EventKind.OTP_ISSUED, session, "delivered_out_of_band", approval_id=approval.approval_id)
                self.out_of_band.deliver(OtpDelivery(approval.approval_id, otp, now))
            self._approvals[approval.approval_id] = approval
            return ActionResult(ActionStatus.PENDING, operation, tier, approval_id=approval.approval_id)

    # -- approvals ---------------------------------------------------------

    def approval(self, approval_id: str) -> PendingApproval:
        with self._lock:
            try:
                return self._approvals[approval_id]
            except KeyError:
                raise UnknownApproval(f"approval {approval_id!r} not found") from None

    def approval_status(self, approval_id: str) -> dict:
        with self._lock:
            return self.approval(approval_id).public()

    def approvals(self) -> list[PendingApproval]:
        with self._lock:
            return list(self._approvals.values())

    def _settle(self, approval: PendingApproval, session: Session, final: ApprovalState) -> Resolution:
        result = None
        executed = False
        if approval.executions == 0:
            result = self._execute(session, approval.operation, approval.payload)
            approval.executions = 1
            executed = True
            self._audit(EventKind.ACTION_EXECUTED, session, "executed", operation=approval.operation,
                        approval_id=approval.approval_id)
        approval.state = final
        return Resolution(approval.approval_id, final, executed, result)

    def _refuse_unless_open(self, approval: PendingApproval, session: Session) -> None:
        # Every refused resolution leaves a trace, like the accepted ones.
        aid = approval.approval_id
        if approval.state is not ApprovalState.PENDING:
            self._audit(EventKind.APPROVAL_REJECTED, session, "not_pending", approval_id=aid)
            raise NotPending(f"approval {aid} is {approval.state.value}")
        if not self.available:
            self._audit(EventKind.APPROVAL_REJECTED, session, "fail_closed", approval_id=aid)
            raise PermissionEngineUnavailable("permission engine unavailable")
        if not session.live:
            self._audit(EventKind.APPROVAL_REJECTED, session, "refused:killed", approval_id=aid)
            raise SessionKilled(f"session {session.session_id} is killed")

    def resolve_soft(self, approval_id: str, decision: str, actor: str) -> Resolution:
        if decision not in ("approve", "reject"):
            raise ValueError("decision must be 'approve' or 'reject'")
        with self._lock:
            approval = self.approval(approval_id)
            session = self._sessions[approval.session_id]
            if approval.tier is not Tier.SOFT_APPROVAL:
                self._audit(EventKind.APPROVAL_REJECTED, session, "wrong_tier", approval_id=approval_id)
                raise WrongTier(f"approval {approval_id} needs strong approval on the out-of-band channel")
            self._refuse_unless_open(approval, session)
            if actor != session.user:
                self._audit(EventKind.APPROVAL_REJECTED, session, "wrong_actor", approval_id=approval_id)
                raise ApprovalError(f"{actor} cannot approve actions for {session.user}")
            if decision == "reject":
                approval.state = ApprovalState.REJECTED
                self._audit(EventKind.APPROVAL_REJECTED, session, "rejected", approval_id=approval_id)
                return Resolution(approval_id, ApprovalState.REJECTED, False)
            self._audit(EventKind.APPROVAL_RESOLVED, session, "approved", approval_id=approval_id, tier="soft")
            return self._settle(approval, session, ApprovalState.APPROVED)

    def resolve_strong(
        self,
        approval_id: str,
        otp_candidate: str,
        channel: Channel | str,
        now: datetime | None = None,
    ) -> Resolution:
        now = self._now(now)
        with self._lock:
            approval = self.approval(approval_id)
            session = self._sessions[approval.session_id]
            if Channel(channel) is not Channel.OUT_OF_BAND:
                self._audit(EventKind.APPROVAL_REJECTED, session, "wrong_channel", approval_id=approval_id)
                raise WrongChannel("strong approvals are only accepted on the out-of-band channel")
            if approval.tier is not Tier.STRONG_APPROVAL:
                self._audit(EventKind.APPROVAL_REJECTED, session, "wrong_tier", approval_id=approval_id)
                raise WrongTier(f"approval {approval_id} is not a strong approval")
            if approval.state is ApprovalState.CONSUMED:
                self._audit(EventKind.APPROVAL_REJECTED, session, "replay", approval_id=approval_id)
                raise Replay(f"approval {approval_id} was already consumed")
            if approval.state is ApprovalState.EXPIRED:
                self._audit(EventKind.APPROVAL_REJECTED, session, "expired", approval_id=approval_id)
                raise Expired(f"approval {approval_id} expired")
            self._refuse_unless_open(approval, session)
            if approval.expires_at is not None and now > approval.expires_at:
                approval.state = ApprovalState.EXPIRED
                self._audit(EventKind.APPROVAL_REJECTED, session, "expired", approval_id=approval_id)
                raise Expired(f"approval {approval_id} expired")
            approval.attempts += 1
            candidate = str(otp_candidate)
            if approval.otp is None or not hmac.compare_digest(candidate.encode(), approval.otp.encode()):
                self._audit(EventKind.APPROVAL_REJECTED, session, "wrong_otp", approval_id=approval_id,
                            attempts=approval.attempts)
                raise WrongOtp(f"wrong code for approval {approval_id}")
            self._audit(EventKind.APPROVAL_RESOLVED, session, "approved", approval_id=approval_id, tier="strong")
            return self._settle(approval, session, ApprovalState.CONSUMED)
