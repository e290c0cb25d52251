"""The Context API: an agent surface and a separate admin (out-of-band) surface.

The two surfaces are distinct ASGI apps meant for distinct listeners. The
agent app authenticates with the bearer token issued at session creation and
has no route that can resolve a strong approval or read a one-time code. The
admin app requires the static admin credential on every request.
"""

from __future__ import annotations

import asyncio
import contextlib
import hmac
import logging
import os
import signal
import socket
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import uvicorn
from fastapi import Body, Depends, FastAPI, Header, Request
from fastapi.responses import JSONResponse, Response

from ..audit import AuditLog, JsonlBackend
from ..control_plane import ControlPlane
from ..errors import ContextError
from ..manifest import parse_manifests, serialize
from ..permissions import Channel, KillScope, Session
from ..timeutil import from_rfc3339, to_rfc3339

log = logging.getLogger(__name__)

_STATUS = {
    "UnknownSession": 404,
    "UnknownApproval": 404,
    "UnknownDomain": 404,
    "UnknownSource": 404,
    "UnknownAgent": 404,
    "UnknownRole": 403,
    "Unauthorized": 401,
    "Forbidden": 403,
    "SessionKilled": 403,
    "WrongTier": 409,
    "NotPending": 409,
    "WrongOtp": 403,
    "Expired": 410,
    "Replay": 409,
    "WrongChannel": 403,
    "ApprovalError": 403,
    "PermissionEngineUnavailable": 503,
    "AuditBackendFailure": 503,
    "SyntaxError": 400,
    "SchemaError": 400,
    "ManifestError": 400,
    "SupersetViolation": 422,
    "EqualSetViolation": 422,
    "TierViolation": 422,
}


class Unauthorized(ContextError):
    code = "Unauthorized"


class Forbidden(ContextError):
    code = "Forbidden"


def error_response(exc: ContextError) -> JSONResponse:
    return JSONResponse(exc.to_dict(), status_code=_STATUS.get(exc.code, 400))


def _install_errors(app: FastAPI) -> None:
    @app.exception_handler(ContextError)
    async def _ctx(_: Request, exc: ContextError):
        return error_response(exc)

    @app.exception_handler(ValueError)
    async def _value(_: Request, exc: ValueError):
        return JSONResponse({"error": "BadRequest", "detail": str(exc)}, status_code=400)

    @app.exception_handler(KeyError)
    async def _key(_: Request, exc: KeyError):
        return JSONResponse({"error": "BadRequest", "detail": f"missing field {exc}"}, status_code=400)


def _session_view(s: Session) -> dict:
    return {
        "session_id": s.session_id,
        "agent_id": s.agent_id,
        "user": s.user,
        "role": s.role,
        "domain": s.domain,
        "scope": {"assigned": list(s.scope.assigned), "last_entity": s.scope.last_entity},
        "state": s.state.value,
        "created_at": to_rfc3339(s.created_at),
    }


def _audit_query(cp: ControlPlane, *, session=None, user=None, kind=None, since=None, until=None) -> list[dict]:
    events = cp.audit.query(
        session=session,
        user=user,
        kind=kind,
        since=from_rfc3339(since) if since else None,
        until=from_rfc3339(until) if until else None,
    )
    return [e.to_dict() for e in events]


# ---------------------------------------------------------------------------
# Agent surface
# ---------------------------------------------------------------------------


def create_agent_app(cp: ControlPlane, *, recorder: list[bytes] | None = None) -> FastAPI:
    """``recorder``, when given, receives the raw bytes of every response."""
    app = FastAPI(title="Context API (agent surface)", version="1")
    _install_errors(app)
    engine = cp.engine

    if recorder is not None:

        @app.middleware("http")
        async def record(request: Request, call_next):
            response = await call_next(request)
            body = b"".join([chunk async for chunk in response.body_iterator])
            recorder.append(body)
            return Response(body, status_code=response.status_code, headers=dict(response.headers))

    def bearer(authorization: str | None = Header(default=None)) -> Session:
        if not authorization or not authorization.lower().startswith("bearer "):
            raise Unauthorized("missing bearer token")
        try:
            return engine.session_for_token(authorization.split(" ", 1)[1].strip())
        except ContextError:
            raise Unauthorized("invalid bearer token") from None

    def own(caller: Session, session_id: str) -> None:
        if caller.session_id != session_id:
            raise Forbidden("token does not belong to this session")

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: dict = Body(...)):
        user = body["user"]
        if cp.org.users and user not in cp.org.users:
            raise Forbidden(f"user {user!r} is not in the organisation")
        known = cp.org.users.get(user)
        scope = body.get("scope") or {}
        assigned = scope.get("assigned")
        if known is not None and assigned is not None and not set(assigned) <= set(known.assigned):
            raise Forbidden("requested scope exceeds the user's assignments")
        s = cp.open_session(
            user,
            role=body.get("role"),
            domain=body.get("domain"),
            assigned=assigned,
            agent_id=body.get("agent_id"),
        )
        return {**_session_view(s), "token": s.token}

    @app.delete("/v1/sessions/{session_id}")
    def end_session(session_id: str, caller: Session = Depends(bearer)):
        own(caller, session_id)
        return _session_view(engine.end_session(session_id))

    @app.post("/v1/context/request")
    def context_request(body: dict = Body(...), caller: Session = Depends(bearer)):
        own(caller, body["session_id"])
        return cp.route(body["session_id"], str(body.get("query", ""))).to_dict()

    @app.post("/v1/actions")
    def submit_action(body: dict = Body(...), caller: Session = Depends(bearer)):
        own(caller, body["session_id"])
        result = engine.submit_action(body["session_id"], body["operation"], body.get("payload") or {})
        return result.to_dict()

    @app.post("/v1/approvals/{approval_id}/soft")
    def resolve_soft(approval_id: str, body: dict = Body(...), caller: Session = Depends(bearer)):
        approval = engine.approval(approval_id)
        if engine.session(approval.session_id).user != caller.user:
            raise Forbidden("approval belongs to another user")
        r = engine.resolve_soft(approval_id, body.get("decision", ""), caller.user)
        return {"approval_id": r.approval_id, "state": r.state.value, "executed": r.executed}

    @app.get("/v1/approvals/{approval_id}")
    def approval_status(approval_id: str, caller: Session = Depends(bearer)):
        approval = engine.approval(approval_id)
        if engine.session(approval.session_id).user != caller.user:
            raise Forbidden("approval belongs to another user")
        return approval.public()

    @app.get("/v1/audit")
    def audit(
        session: str | None = None,
        kind: str | None = None,
        since: str | None = None,
        until: str | None = None,
        caller: Session = Depends(bearer),
    ):
        # Agents see only their own user's trail.
        return {"events": _audit_query(cp, session=session, user=caller.user, kind=kind, since=since, until=until)}

    @app.get("/v1/health")
    def health():
        return cp.health()

    return app


# ---------------------------------------------------------------------------
# Admin surface
# ---------------------------------------------------------------------------


def create_admin_app(cp: ControlPlane, credential: str) -> FastAPI:
    if not credential:
        raise ValueError("admin credential must be non-empty")
    app = FastAPI(title="Context API (admin surface)", version="1")
    _install_errors(app)
    engine = cp.engine

    def admin(x_admin_credential: str | None = Header(default=None)) -> None:
        if not x_admin_credential or not hmac.compare_digest(x_admin_credential.encode(), credential.encode()):
            raise Unauthorized("admin credential required")

    guard = [Depends(admin)]

    @app.post("/admin/v1/approvals/{approval_id}/strong", dependencies=guard)
    def resolve_strong(approval_id: str, body: dict = Body(...)):
        r = engine.resolve_strong(approval_id, str(body.get("otp", "")), Channel.OUT_OF_BAND)
        return {"approval_id": r.approval_id, "state": r.state.value, "executed": r.executed}

    @app.post("/admin/v1/killswitch", dependencies=guard)
    def killswitch(body: dict = Body(...)):
        kind = body.get("scope")
        if kind not in ("session", "user", "global"):
            raise ValueError("scope must be session, user or global")
        count = engine.kill_switch(KillScope(kind, body.get("id")))
        return {"scope": kind, "id": body.get("id"), "killed": count}

    # Operator extensions used by ctxctl.

    @app.get("/admin/v1/otp/{approval_id}", dependencies=guard)
    def otp_delivery(approval_id: str):
        # Stands in for the user's second-factor device.
        for rec in reversed(engine.out_of_band.records()):
            if rec.approval_id == approval_id:
                return rec.to_dict()
        raise ContextError(f"no code issued for {approval_id}")

    @app.post("/admin/v1/manifests", dependencies=guard)
    async def apply_manifest(request: Request):
        text = (await request.body()).decode("utf-8")
        applied = []
        for m in parse_manifests(text):
            cp.apply(m)
            applied.append(m.name)
        return {"applied": applied}

    @app.get("/admin/v1/domains", dependencies=guard)
    def domains():
        return {"domains": [{"name": m.name, "namespace": m.namespace, "sources": [s.name for s in m.sources]}
                            for m in cp.registry.manifests()]}

    @app.get("/admin/v1/domains/{name}", dependencies=guard)
    def domain(name: str):
        return {"manifest": serialize(cp.registry.manifest(name))}

    @app.get("/admin/v1/sources", dependencies=guard)
    def sources():
        return cp.health()["sources"]

    @app.get("/admin/v1/sessions", dependencies=guard)
    def sessions():
        return {"sessions": [_session_view(s) for s in engine.sessions()]}

    @app.get("/admin/v1/audit", dependencies=guard)
    def audit(session: str | None = None, user: str | None = None, kind: str | None = None,
              since: str | None = None, until: str | None = None):
        return {"events": _audit_query(cp, session=session, user=user, kind=kind, since=since, until=until)}

    @app.post("/admin/v1/reconcile", dependencies=guard)
    def reconcile():
        return cp.reconcile().to_dict()

    @app.post("/admin/v1/engine", dependencies=guard)
    def engine_flag(body: dict = Body(...)):
        engine.set_available(bool(body.get("available", True)))
        if body.get("lift_global_kill"):
            engine.lift_global_kill()
        return {"available": engine.available, "global_killed": engine.global_killed}

    return app


# ---------------------------------------------------------------------------
# Serving
# ---------------------------------------------------------------------------


def _split_addr(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    return host or "127.0.0.1", int(port)


@dataclass
class ApiConfig:
    root: Path
    agent_listen_address: str = "127.0.0.1:8080"
    admin_listen_address: str = "127.0.0.1:8081"
    admin_credential: str = ""
    interval: float = 5.0
    audit_path: Path | None = None
    audit_stdout: bool = False

    def __post_init__(self):
        self.root = Path(self.root)
        if _split_addr(self.agent_listen_address) == _split_addr(self.admin_listen_address):
            raise ValueError("agent and admin listeners must use different addresses")
        if not self.admin_credential:
            raise ValueError("an admin credential is required")

    def __repr__(self) -> str:
        return (f"ApiConfig(root={self.root!s}, agent={self.agent_listen_address}, "
                f"admin={self.admin_listen_address}, interval={self.interval})")

    @classmethod
    def from_env(cls, root, **overrides) -> "ApiConfig":
        values: dict[str, Any] = {
            "agent_listen_address": os.environ.get("CTX_AGENT_ADDR", "127.0.0.1:8080"),
            "admin_listen_address": os.environ.get("CTX_ADMIN_ADDR", "127.0.0.1:8081"),
            "admin_credential": os.environ.get("CTX_ADMIN_CREDENTIAL", ""),
        }
        if os.environ.get("CTX_AUDIT_PATH"):
            values["audit_path"] = Path(os.environ["CTX_AUDIT_PATH"])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(root=root, **values)


def build_control_plane(config: ApiConfig) -> ControlPlane:
    """Load and validate everything; raises ManifestError before anything listens."""
    audit = None
    if config.audit_path is not None:
        audit = AuditLog(JsonlBackend(config.audit_path, mirror_stdout=config.audit_stdout))
    kwargs = {"audit": audit} if audit is not None else {}
    cp = ControlPlane.from_directory(config.root, **kwargs)
    cp.bootstrap()
    return cp


class _Server(uvicorn.Server):
    # The caller owns signal handling, so two servers can share one loop.
    @contextlib.contextmanager
    def capture_signals(self):
        yield


class BackgroundServer:
    """Serve an ASGI app on an ephemeral localhost port from a worker thread."""

    def __init__(self, app, host: str = "127.0.0.1"):
        self.app = app
        self.host = host
        self.port = 0
        self._server: _Server | None = None
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def __enter__(self) -> "BackgroundServer":
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((self.host, 0))
        self.port = sock.getsockname()[1]
        self._server = _Server(uvicorn.Config(self.app, log_level="warning", access_log=False))
        self._thread = threading.Thread(
            target=lambda: asyncio.run(self._server.serve(sockets=[sock])), name="ctx-server", daemon=True
        )
        self._thread.start()
        deadline = time.monotonic() + 10
        while not self._server.started:
            if time.monotonic() > deadline or not self._thread.is_alive():
                raise RuntimeError("server did not start")
            time.sleep(0.01)
        return self

    def __exit__(self, *exc) -> None:
        self._server.should_exit = True
        self._thread.join(10)


def serve(config: ApiConfig) -> None:
    cp = build_control_plane(config)
    ah, ap = _split_addr(config.agent_listen_address)
    mh, mp = _split_addr(config.admin_listen_address)
    agent = _Server(uvicorn.Config(create_agent_app(cp), host=ah, port=ap, log_level="info"))
    admin = _Server(uvicorn.Config(create_admin_app(cp, config.admin_credential), host=mh, port=mp, log_level="info"))

    async def main():
        loop = asyncio.get_running_loop()

        def stop():
            agent.should_exit = True
            admin.should_exit = True

        for sig in (signal.SIGINT, signal.SIGTERM):
            with contextlib.suppress(NotImplementedError):
                loop.add_signal_handler(sig, stop)
        cp.reconciler.start(config.interval)
        try:
            await asyncio.gather(agent.serve(), admin.serve())
        finally:
            cp.reconciler.stop()

    asyncio.run(main())
    if not (agent.started and admin.started):
        raise SystemExit(1)
