"""Both listeners on localhost: the agent works over HTTP, the operator approves on the admin side.

    python demos/http_api.py
"""

import tempfile
from pathlib import Path

import httpx

from contextk8s.bench.harness import load_world
from contextk8s.bench.seed import generate_seed
from contextk8s.service.app import BackgroundServer, create_admin_app, create_agent_app

CREDENTIAL = "demo-admin-credential"

root = generate_seed(Path(tempfile.mkdtemp()) / "firm")
cp = load_world(root).control_plane()

with BackgroundServer(create_agent_app(cp)) as agent_srv, \
        BackgroundServer(create_admin_app(cp, CREDENTIAL)) as admin_srv:
    agent = httpx.Client(base_url=agent_srv.url)
    admin = httpx.Client(base_url=admin_srv.url, headers={"X-Admin-Credential": CREDENTIAL})
    print(f"agent surface {agent_srv.url}, admin surface {admin_srv.url}")

    s = agent.post("/v1/sessions", json={"user": "carol"}).json()
    h = {"Authorization": f"Bearer {s['token']}"}
    d = agent.post("/v1/context/request", headers=h,
                   json={"session_id": s["session_id"], "query": "Q3 pipeline forecast"}).json()
    print(f"delivered {[r['unit_id'] for r in d['results']]}")

    act = agent.post("/v1/actions", headers=h, json={"session_id": s["session_id"],
                                                      "operation": "sign-contract", "payload": {}}).json()
    aid = act["approval_id"]
    print(f"sign-contract is {act['status']}; the agent sees {sorted(agent.get(f'/v1/approvals/{aid}', headers=h).json())}")

    soft = agent.post(f"/v1/approvals/{aid}/soft", headers=h, json={"decision": "approve"})
    print(f"agent tries the soft path: {soft.status_code} {soft.json()['error']}")

    code = admin.get(f"/admin/v1/otp/{aid}").json()["otp"]  # stands in for the user's phone
    done = admin.post(f"/admin/v1/approvals/{aid}/strong", json={"otp": code}).json()
    print(f"operator submits the code: {done['state']}, executed={done['executed']}")

    killed = admin.post("/admin/v1/killswitch", json={"scope": "user", "id": "carol"}).json()
    print(f"kill switch: {killed['killed']} session(s)")
    again = agent.post("/v1/context/request", headers=h, json={"session_id": s["session_id"], "query": "pipeline"})
    print(f"after kill: {again.status_code} {again.json()['error']}")
