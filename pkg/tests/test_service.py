import pytest
from fastapi.testclient import TestClient

from contextk8s.bench.seed import DEAL
from contextk8s.service.app import ApiConfig, BackgroundServer, build_control_plane, create_admin_app, create_agent_app

from .conftest import ADMIN_CREDENTIAL


def open_session(client, user="alice", **extra):
    r = client.post("/v1/sessions", json={"user": user, **extra})
    assert r.status_code == 201, r.text
    body = r.json()
    return body, {"Authorization": f"Bearer {body['token']}"}


def pending_email(client, s, h):
    r = client.post("/v1/actions", headers=h, json={
        "session_id": s["session_id"], "operation": "send-external-email", "payload": {"to": "x@example.com"}})
    assert r.json()["status"] == "pending"
    return r.json()["approval_id"]


# -- agent surface -------------------------------------------------------------


def test_health_lists_five_domains(agent_client):
    body = agent_client.get("/v1/health").json()
    assert body["status"] == "ok"
    assert sorted(body["domains"]) == ["clients", "delivery", "finance", "hr", "sales"]
    assert all(v["status"] == "connected" for srcs in body["sources"].values() for v in srcs.values())


def test_session_lifecycle(agent_client):
    s, h = open_session(agent_client)
    assert s["session_id"].startswith("ses-") and s["role"] == "sales-rep"
    r = agent_client.delete(f"/v1/sessions/{s['session_id']}", headers=h)
    assert r.status_code == 200 and r.json()["state"] != "active"
    r = agent_client.post("/v1/context/request", headers=h, json={"session_id": s["session_id"], "query": "pipeline"})
    assert r.status_code == 403


def test_unknown_user_and_widened_scope_refused(agent_client):
    assert agent_client.post("/v1/sessions", json={"user": "mallory"}).status_code == 403
    r = agent_client.post("/v1/sessions", json={"user": "bob", "scope": {"assigned": ["henderson"]}})
    assert r.status_code == 403 and r.json()["error"] == "Forbidden"


def test_context_request_delivery_shape(agent_client):
    s, h = open_session(agent_client)
    body = agent_client.post("/v1/context/request", headers=h,
                             json={"session_id": s["session_id"], "query": "Henderson deal status"}).json()
    assert {"session_id", "intent", "results", "audit_ref"} <= set(body)
    ids = [r["unit_id"] for r in body["results"]]
    assert DEAL in ids
    first = body["results"][0]
    assert {"score", "signals", "freshness", "metadata", "tokens"} <= set(first)


def test_token_must_match_session(agent_client):
    a, ha = open_session(agent_client, "alice")
    b, _ = open_session(agent_client, "bob")
    r = agent_client.post("/v1/context/request", headers=ha, json={"session_id": b["session_id"], "query": "x"})
    assert r.status_code == 403
    assert agent_client.get("/v1/audit").status_code == 401
    assert agent_client.get("/v1/audit", headers={"Authorization": "Bearer tok-nope"}).status_code == 401


def test_agent_audit_is_limited_to_its_user(agent_client):
    open_session(agent_client, "bob")
    _, h = open_session(agent_client, "alice")
    events = agent_client.get("/v1/audit", headers=h).json()["events"]
    assert events and {e["user"] for e in events} == {"alice"}


def test_action_outcomes(agent_client):
    s, h = open_session(agent_client)
    sid = s["session_id"]
    assert agent_client.post("/v1/actions", headers=h, json={
        "session_id": sid, "operation": "draft-document", "payload": {}}).json()["status"] == "executed"
    assert agent_client.post("/v1/actions", headers=h, json={
        "session_id": sid, "operation": "commit-to-pricing"}).json()["status"] == "refused"
    soft = agent_client.post("/v1/actions", headers=h, json={"session_id": sid, "operation": "send-internal-msg"}).json()
    r = agent_client.post(f"/v1/approvals/{soft['approval_id']}/soft", headers=h, json={"decision": "approve"})
    assert r.json() == {"approval_id": soft["approval_id"], "state": "approved", "executed": True}


def test_other_users_approval_is_hidden(agent_client):
    s, h = open_session(agent_client, "alice")
    apr = pending_email(agent_client, s, h)
    _, hb = open_session(agent_client, "bob")
    assert agent_client.get(f"/v1/approvals/{apr}", headers=hb).status_code == 403
    assert agent_client.post(f"/v1/approvals/{apr}/soft", headers=hb, json={"decision": "approve"}).status_code == 403


def test_errors_have_uniform_shape(agent_client):
    _, h = open_session(agent_client)
    r = agent_client.get("/v1/approvals/apr-missing", headers=h)
    assert r.status_code == 404 and set(r.json()) >= {"error", "detail"}
    r = agent_client.post("/v1/actions", headers=h, json={"operation": "x"})
    assert r.status_code == 400 and r.json()["error"] == "BadRequest"


# -- channel separation --------------------------------------------------------


def test_no_agent_route_resolves_strong_approval(cp, agent_client):
    s, h = open_session(agent_client)
    apr = pending_email(agent_client, s, h)
    code = cp.engine.out_of_band.code_for(apr)
    before = cp.engine.approval(apr).public()
    paths = sorted({r.path for r in agent_client.app.routes if getattr(r, "path", "").startswith("/v1")})
    hit = 0
    for path in paths:
        url = (path.replace("{approval_id}", apr).replace("{session_id}", "ses-other"))
        for method in ("get", "post"):
            kw = {} if method == "get" else {"json": {"session_id": s["session_id"], "otp": code,
                                                      "decision": "approve", "query": "x", "operation": "read"}}
            getattr(agent_client, method)(url, headers=h, **kw)
            hit += 1
        # The surface has no strong or otp route at all.
        assert "strong" not in path and "otp" not in path
    assert hit >= 14
    assert cp.engine.approval(apr).public() == before
    assert cp.engine.side_effects == []


def test_admin_needs_credential(cp, agent_client):
    s, h = open_session(agent_client)
    apr = pending_email(agent_client, s, h)
    with TestClient(create_admin_app(cp, ADMIN_CREDENTIAL)) as admin:
        code = cp.engine.out_of_band.code_for(apr)
        assert admin.post(f"/admin/v1/approvals/{apr}/strong", json={"otp": code}).status_code == 401
        assert admin.post(f"/admin/v1/approvals/{apr}/strong", headers={"X-Admin-Credential": s["token"]},
                          json={"otp": code}).status_code == 401
    assert cp.engine.approval(apr).state.value == "pending"


def test_strong_approval_via_admin(cp, agent_client, admin_client):
    s, h = open_session(agent_client)
    apr = pending_email(agent_client, s, h)
    code = cp.engine.out_of_band.code_for(apr)
    wrong = f"{(int(code) + 1) % 1_000_000:06d}"
    r = admin_client.post(f"/admin/v1/approvals/{apr}/strong", json={"otp": wrong})
    assert r.status_code == 403 and r.json()["error"] == "WrongOtp"
    r = admin_client.post(f"/admin/v1/approvals/{apr}/strong", json={"otp": code})
    assert r.json()["state"] == "consumed" and r.json()["executed"]
    assert agent_client.get(f"/v1/approvals/{apr}", headers=h).json()["state"] == "consumed"


def test_killswitch_endpoint(agent_client, admin_client):
    s, h = open_session(agent_client)
    open_session(agent_client)
    r = admin_client.post("/admin/v1/killswitch", json={"scope": "user", "id": "alice"})
    assert r.json()["killed"] == 2
    r = agent_client.post("/v1/context/request", headers=h, json={"session_id": s["session_id"], "query": "pipeline"})
    assert r.status_code == 403 and r.json()["error"] == "SessionKilled"
    assert admin_client.post("/admin/v1/killswitch", json={"scope": "planet"}).status_code == 400


def test_admin_inspection_endpoints(admin_client, sample_text):
    assert len(admin_client.get("/admin/v1/domains").json()["domains"]) == 5
    assert "kind: ContextDomain" in admin_client.get("/admin/v1/domains/sales").json()["manifest"]
    assert set(admin_client.get("/admin/v1/sources").json()) == {"clients", "sales", "delivery", "hr", "finance"}
    assert admin_client.get("/admin/v1/sessions").json() == {"sessions": []}
    report = admin_client.post("/admin/v1/reconcile").json()
    assert "cycle_id" in report
    r = admin_client.post("/admin/v1/manifests", content=b"kind: [", headers={"Content-Type": "application/yaml"})
    assert r.status_code == 400 and r.json()["error"] == "SyntaxError"


def test_engine_down_fails_closed_over_http(agent_client, admin_client):
    s, h = open_session(agent_client)
    admin_client.post("/admin/v1/engine", json={"available": False})
    body = agent_client.post("/v1/context/request", headers=h,
                             json={"session_id": s["session_id"], "query": "Henderson deal"}).json()
    assert body["results"] == []


# -- config --------------------------------------------------------------------


def test_config_rejects_shared_listener(tmp_path):
    with pytest.raises(ValueError):
        ApiConfig(tmp_path, agent_listen_address="127.0.0.1:9000", admin_listen_address=":9000",
                  admin_credential="c")
    with pytest.raises(ValueError):
        ApiConfig(tmp_path)


def test_config_repr_hides_credential(tmp_path):
    cfg = ApiConfig(tmp_path, admin_credential="hunter2-very-secret")
    assert "hunter2" not in repr(cfg) and "hunter2" not in str(cfg)


def test_config_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CTX_ADMIN_CREDENTIAL", "from-env")
    monkeypatch.setenv("CTX_AGENT_ADDR", "127.0.0.1:7001")
    cfg = ApiConfig.from_env(tmp_path, admin_listen_address="127.0.0.1:7002")
    assert cfg.admin_credential == "from-env" and cfg.admin_listen_address.endswith("7002")


def test_invalid_manifest_refuses_start(world):
    (world.root / "manifests" / "broken.yaml").write_text("kind: ContextDomain\nmetadata: {}\n", encoding="utf-8")
    from contextk8s.errors import ManifestError

    with pytest.raises(ManifestError):
        build_control_plane(ApiConfig(world.root, admin_credential="c"))


def test_background_server_real_socket(cp, agent_traffic):
    import httpx

    recorder, planes = agent_traffic
    planes.append(cp)
    with BackgroundServer(create_agent_app(cp, recorder=recorder)) as server:
        r = httpx.get(server.url + "/v1/health", timeout=10)
        assert r.status_code == 200 and len(r.json()["domains"]) == 5
