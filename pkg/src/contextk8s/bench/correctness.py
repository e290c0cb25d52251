"""Correctness experiments C1 to C5.

Each ``run_cN`` returns a JSON-serialisable dict with a boolean ``passed``
plus the measurements behind it. All runs are sequential and seeded except
the C4 soak, which drives a live HTTP listener from fifty threads.
"""

from __future__ import annotations

import random
import threading
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from datetime import timedelta

import httpx
import numpy as np

from ..audit import AuditLog, EventKind
from ..control_plane import ControlPlane
from ..cxri import InMemoryStore, drop_store, register_store
from ..errors import (
    EqualSetViolation,
    SessionKilled,
    SupersetViolation,
    TierViolation,
)
from ..freshness.state import FreshnessState
from ..manifest import parse_manifest
from ..permissions import READ, AgentProfile, KillScope, UserRole, derive_agent_profile, derive_user_role
from ..registry import SourceStatus
from ..router import classify_intent, random_classifier
from ..tiers import Tier
from ..timeutil import ManualClock, from_rfc3339
from .harness import World, is_leak, latency_stats, private_world
from .seed import DEAL, HEND_PROFILE, RATES

EXPERIMENTS = ("c1", "c2", "c3", "c4", "c5")
C1_FLOOR = 0.55


def run_correctness(experiment: str, world: World | None = None, **options) -> dict:
    runners = {"c1": run_c1, "c2": run_c2, "c3": run_c3, "c4": run_c4, "c5": run_c5}
    if experiment not in runners:
        raise ValueError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    t0 = time.perf_counter()
    report = runners[experiment](world, **options)
    report["runtime_s"] = round(time.perf_counter() - t0, 3)
    return report


def _delivery_violations(engine, session, units, world: World) -> int:
    """Units a session should never have seen, judged independently of the router."""
    bad = 0
    current = engine.session(session.session_id)
    for u in units:
        if is_leak(u, current.role, world.permitted_domains(current.user)):
            bad += 1
        elif not engine.check_path(current, READ, u.metadata.domain, u.metadata.path):
            bad += 1
    return bad


# ---------------------------------------------------------------------------
# C1: routing
# ---------------------------------------------------------------------------


def run_c1(world: World | None = None, *, fuzz_queries: int = 1000, seed: int = 7) -> dict:
    world = world or private_world()
    cp = world.control_plane()
    taxonomy = cp.router.taxonomy
    entities = world.org.entities

    correct = 0
    abstained = 0
    samples = []
    for q in world.benchmark["queries"]:
        t0 = time.perf_counter()
        intent = classify_intent(q["text"], taxonomy, known_entities=entities)
        samples.append((time.perf_counter() - t0) * 1000.0)
        if intent.abstained:
            abstained += 1
        elif intent.domain_names[0] in q["domains"]:
            correct += 1
    accuracy = correct / len(world.benchmark["queries"])

    coref_ok = 0
    for case in world.benchmark["coreference"]:
        session = cp.open_session(case["user"])
        for turn in case["turns"]:
            cp.route(session.session_id, turn)
        if cp.engine.session(session.session_id).scope.last_entity == case["expected_entity"]:
            coref_ok += 1

    # Misrouting safety: any domain choice must still be filtered by permissions.
    rng = np.random.default_rng(seed)
    pick = random.Random(seed)
    fuzz_cp = world.control_plane()
    fuzz_cp.router.classifier = random_classifier(rng, sorted(taxonomy.domains))
    queries = world.benchmark["queries"]
    users = sorted(world.org.users)
    violations = delivered = 0
    for _ in range(fuzz_queries):
        q = pick.choice(queries)
        session = fuzz_cp.open_session(pick.choice(users))
        units = fuzz_cp.route(session.session_id, q["text"]).units
        delivered += len(units)
        violations += _delivery_violations(fuzz_cp.engine, session, units, world)
        fuzz_cp.engine.end_session(session.session_id)

    return {
        "experiment": "c1",
        "accuracy": round(accuracy, 4),
        "floor": C1_FLOOR,
        "abstained": abstained,
        "classification_latency": latency_stats(samples),
        "coreference": f"{coref_ok}/{len(world.benchmark['coreference'])}",
        "fuzz_queries": fuzz_queries,
        "fuzz_delivered": delivered,
        "fuzz_violations": violations,
        "passed": accuracy >= C1_FLOOR and violations == 0,
    }


# ---------------------------------------------------------------------------
# C2: permission correctness
# ---------------------------------------------------------------------------


def run_c2(world: World | None = None) -> dict:
    world = world or private_world()
    cp = world.control_plane()
    engine = cp.engine
    cases = []
    tally = {"unauthorized": 0, "false_positives": 0, "invariant_violations": 0}

    def deliver(user: str, query: str, session=None):
        session = session or cp.open_session(user)
        units = cp.route(session.session_id, query).units
        tally["unauthorized"] += _delivery_violations(engine, session, units, world)
        return session, units

    def case(name: str, ok: bool, **detail):
        cases.append({"case": name, "passed": bool(ok), **detail})

    # 1. authorized access is granted
    _, units = deliver("alice", "What is the Henderson deal status?")
    _, units2 = deliver("ivan", "Who is the key contact at Henderson?")
    got = {u.id for u in units} | {u.id for u in units2}
    fp = int(DEAL not in got) + int(HEND_PROFILE not in got)
    tally["false_positives"] += fp
    case("authorized_access", fp == 0, delivered=len(units) + len(units2))

    # 2. cross-domain requests are denied
    _, hr = deliver("alice", "What is the salary band for a senior consultant?")
    _, sales = deliver("grace", "What are our daily rates for a senior consultant?")
    _, scoped = deliver("bob", "What is the Henderson deal status?")
    leaked = [u.id for u in hr if u.metadata.domain == "hr"] + [u.id for u in sales if u.metadata.domain != "hr"]
    leaked += [u.id for u in scoped if u.id == DEAL]
    case("cross_domain_denial", not leaked, leaked=leaked)

    # 3. kill switch stops everything for the session, the user, and globally
    s1, _ = deliver("carol", "What are our daily rates for a senior consultant?")
    engine.kill_switch(KillScope.session(s1.session_id))
    blocked = 0
    try:
        cp.route(s1.session_id, "pricing")
    except SessionKilled:
        blocked += 1
    blocked += engine.submit_action(s1.session_id, "draft-document", {"title": "x"}).status.value == "refused"
    s2 = cp.open_session("dave")
    engine.kill_switch(KillScope.user("dave"))
    blocked += not engine.session(s2.session_id).live
    engine.kill_switch(KillScope.all())
    try:
        cp.open_session("heidi")
    except SessionKilled:
        blocked += 1
    engine.lift_global_kill()
    case("kill_switch", blocked == 4, blocked=blocked)

    # 4-6. invalid registrations are rejected
    manifest = cp.registry.manifest("sales")
    role = derive_user_role(manifest, "sales-rep")
    good = derive_agent_profile(manifest, "sales-rep", "alice", "probe-agent")

    def rejects(profile: AgentProfile, user_role: UserRole, exc) -> bool:
        try:
            engine.register_agent_profile(profile, user_role)
        except exc:
            return True
        tally["invariant_violations"] += 1
        return False

    superset = AgentProfile("probe-superset", "alice", "sales-rep", "sales",
                            good.operations | {"sign-contract"}, {**good.tier_of, "sign-contract": Tier.STRONG_APPROVAL})
    case("superset_registration", rejects(superset, role, SupersetViolation))
    equal = AgentProfile("probe-equal", "alice", "sales-rep", "sales", role.operations,
                         {op: Tier.STRONG_APPROVAL for op in role.operations})
    case("equal_set_registration", rejects(equal, role, EqualSetViolation))
    tiered_role = UserRole(role.role, role.domain, role.read_paths, role.write_paths, role.operations,
                           {"send-internal-msg": Tier.SOFT_APPROVAL})
    loose = AgentProfile("probe-tier", "alice", "sales-rep", "sales", good.operations,
                         {**good.tier_of, "send-internal-msg": Tier.AUTONOMOUS})
    case("tier_violation_registration", rejects(loose, tiered_role, TierViolation))

    # 7. fail closed
    s3 = cp.open_session("alice")
    engine.set_available(False)
    d = cp.route(s3.session_id, "What is the Henderson deal status?")
    refused = engine.submit_action(s3.session_id, "draft-document", {"title": "x"})
    engine.set_available(True)
    case("fail_closed", not d.units and d.reason == "fail_closed" and refused.reason == "fail_closed")

    passed = all(c["passed"] for c in cases) and not any(tally.values())
    return {"experiment": "c2", "cases": cases, **tally, "passed": passed}


# ---------------------------------------------------------------------------
# C3: freshness
# ---------------------------------------------------------------------------

_C3_MANIFEST = """apiVersion: context/v1
kind: ContextDomain
metadata: {{name: {name}, namespace: freshness-lab}}
spec:
  sources:
{sources}
  access:
    roles:
      - {{role: analyst, read: ["*"], write: ["*"]}}
    agentPermissions:
      read: autonomous
      write: {{default: soft-approval, paths: {{}}}}
      execute: {{draft-document: autonomous, purge: excluded}}
  freshness:
    defaults: {{maxAge: 1h, staleAction: {action}}}
"""

T0 = from_rfc3339("2026-03-16T09:00:00Z")


class _Lab:
    """In-memory domains on a manual clock, for timing and transition checks."""

    def __init__(self, layout: dict[str, int], *, rows: int = 5, action: str = "re-sync", tag: str = "lab"):
        self.clock = ManualClock(T0)
        self.stores: dict[str, InMemoryStore] = {}
        manifests = []
        for d_index, (domain, n_sources) in enumerate(sorted(layout.items())):
            src_lines = []
            for i in range(n_sources):
                name = f"src{chr(ord('a') + i)}"
                store = register_store(InMemoryStore(f"{tag}-{domain}-{name}"))
                for r in range(rows):
                    store.put(f"records/r{r}.md", f"{domain} {name} record {r} status green", T0 - timedelta(minutes=r))
                self.stores[f"{domain}/{name}"] = store
                src_lines.append(f"    - {{name: {name}, type: database, config: {{store: {store.name}}}}}")
            manifests.append(parse_manifest(_C3_MANIFEST.format(name=domain, sources="\n".join(src_lines), action=action)))
        self.cp = ControlPlane(manifests, clock=self.clock, audit=AuditLog(clock=self.clock))
        self.cp.bootstrap()

    @property
    def registry(self):
        return self.cp.registry

    def states(self, domain: str) -> dict[str, FreshnessState]:
        return {v.unit.id: v.state for v in self.registry.views(domain, self.clock.now())}

    def cycle(self):
        return self.cp.reconcile()

    def close(self) -> None:
        for store in self.stores.values():
            drop_store(store.name)


def run_c3(world: World | None = None, *, cycles: int = 20) -> dict:
    scenarios = []

    def record(name: str, ok: bool, **detail):
        scenarios.append({"scenario": name, "passed": bool(ok), **detail})

    # 1-2: transitions by age alone (flag policy so nothing re-syncs them)
    lab = _Lab({"alpha": 1}, action="flag", tag="c3t")
    try:
        seen = [set(lab.states("alpha").values())]
        lab.clock.advance(timedelta(minutes=61))
        seen.append(set(lab.states("alpha").values()))
        lab.clock.advance(timedelta(minutes=60))
        seen.append(set(lab.states("alpha").values()))
        record("fresh_to_stale", seen[0] == {FreshnessState.FRESH} and seen[1] == {FreshnessState.STALE})
        record("stale_to_expired", seen[2] == {FreshnessState.EXPIRED})

        # 3: stale detection by the loop (flag action), timed
        lab.clock.set(T0 + timedelta(minutes=1))
        for uid in lab.registry.unit_ids("alpha"):
            lab.registry.mark_verified(uid, T0)
        lab.clock.set(T0 + timedelta(minutes=61))
        report = lab.cycle()
        flagged = [a for a in report.actions if a.get("action") == "flag"]
        stale_ms = report.duration_ms
        record("stale_detection", len(flagged) == 5, latency_ms=round(stale_ms, 4))
    finally:
        lab.close()

    # 4-5: re-sync on upstream change and on age
    lab = _Lab({"beta": 1}, tag="c3r")
    try:
        store = lab.stores["beta/srca"]
        store.put("records/r0.md", "beta srca record 0 status red", T0 + timedelta(minutes=5))
        lab.clock.advance(timedelta(minutes=5))
        lab.cycle()
        uid = "beta/srca/records/r0.md"
        live = lab.registry.live_versions(uid)
        record("resync_on_change", len(live) == 1 and "red" in live[0].content, version=live[0].version)
        lab.clock.advance(timedelta(minutes=70))
        before = set(lab.states("beta").values())
        lab.cycle()
        after = set(lab.states("beta").values())
        record("resync_on_age", before == {FreshnessState.STALE} and after == {FreshnessState.FRESH})
    finally:
        lab.close()

    # 6-9: disconnect, dependents, recovery, independence
    lab = _Lab({"gamma": 2}, tag="c3d")
    try:
        down = lab.stores["gamma/srca"]
        up = lab.stores["gamma/srcb"]
        down.available = False
        report = lab.cycle()
        state = lab.registry.source_state("srca", "gamma")
        disconnect_ms = report.duration_ms
        record("disconnect_detection", state.status is SourceStatus.DISCONNECTED
               and "source_disconnected" in report.delta_types(), latency_ms=round(disconnect_ms, 4))
        states = lab.states("gamma")
        a_states = {s for uid, s in states.items() if "/srca/" in uid}
        b_states = {s for uid, s in states.items() if "/srcb/" in uid}
        record("dependents_marked_stale", a_states == {FreshnessState.STALE})
        up.put("records/r1.md", "gamma srcb record 1 status amber", T0 + timedelta(minutes=1))
        lab.clock.advance(timedelta(minutes=1))
        lab.cycle()
        b_live = lab.registry.live_versions("gamma/srcb/records/r1.md")
        record("multi_source_independence", b_states == {FreshnessState.FRESH}
               and lab.registry.source_state("srcb", "gamma").status is SourceStatus.CONNECTED
               and "amber" in b_live[0].content)
        down.delete("records/r4.md")
        down.available = True
        lab.clock.advance(timedelta(minutes=1))
        lab.cycle()
        a_after = {s for uid, s in lab.states("gamma").items() if "/srca/" in uid}
        record("recovery", lab.registry.source_state("srca", "gamma").status is SourceStatus.CONNECTED
               and a_after == {FreshnessState.FRESH}
               and not lab.registry.live_versions("gamma/srca/records/r4.md"))
    finally:
        lab.close()

    # 20-source cycle
    lab = _Lab({"d1": 5, "d2": 5, "d3": 5, "d4": 5}, rows=10, tag="c3c")
    try:
        durations = []
        keys = sorted(lab.stores)
        for i in range(cycles):
            lab.stores[keys[i % len(keys)]].put("records/r0.md", f"revision {i} status green", lab.clock.now())
            lab.clock.advance(timedelta(seconds=5))
            durations.append(lab.cycle().duration_ms)
        cycle_ms = sum(durations) / len(durations)
    finally:
        lab.close()

    passed = all(s["passed"] for s in scenarios) and stale_ms < 10 and disconnect_ms < 10 and cycle_ms < 250
    return {
        "experiment": "c3",
        "scenarios": scenarios,
        "stale_detection_ms": round(stale_ms, 4),
        "disconnect_detection_ms": round(disconnect_ms, 4),
        "cycle_20_sources_ms": round(cycle_ms, 3),
        "passed": passed,
    }


# ---------------------------------------------------------------------------
# C4: latency and concurrent soak
# ---------------------------------------------------------------------------

C4_SIMPLE = ("alice", "Show me the Q3 pipeline forecast")
C4_CROSS = ("ivan", "Give me everything on Henderson: client profile, deal and project status")


def run_c4(
    world: World | None = None,
    *,
    sessions: int = 50,
    duration: float = 30.0,
    rate: float = 8.0,
    samples: int = 30,
) -> dict:
    """Latency by condition, then ``sessions`` agents at ``rate`` requests/s for ``duration`` seconds."""
    from ..service.app import BackgroundServer, create_agent_app

    world = world or private_world()
    cp = world.control_plane()
    recorder: list[bytes] = []
    app = create_agent_app(cp, recorder=recorder)
    queries_by_user: dict[str, list[str]] = {}
    for q in world.benchmark["queries"]:
        queries_by_user.setdefault(q["user"], []).append(q["text"])

    with BackgroundServer(app) as server:

        def open_session(client: httpx.Client, user: str) -> dict:
            r = client.post("/v1/sessions", json={"user": user})
            r.raise_for_status()
            return r.json()

        def timed(user: str, query: str) -> list[float]:
            with httpx.Client(base_url=server.url, timeout=30) as c:
                s = open_session(c, user)
                h = {"Authorization": f"Bearer {s['token']}"}
                out = []
                for _ in range(samples):
                    t0 = time.perf_counter()
                    c.post("/v1/context/request", json={"session_id": s["session_id"], "query": query}, headers=h).raise_for_status()
                    out.append((time.perf_counter() - t0) * 1000.0)
                return out

        simple = latency_stats(timed(*C4_SIMPLE))
        cross = latency_stats(timed(*C4_CROSS))
        path = world.root / "data" / "sales" / "pipeline" / "q3-forecast.md"
        direct = []
        for _ in range(samples):
            t0 = time.perf_counter()
            path.read_bytes()
            direct.append((time.perf_counter() - t0) * 1000.0)

        users = sorted(world.org.users)
        with httpx.Client(base_url=server.url, timeout=30) as c:
            agents = [open_session(c, users[i % len(users)]) for i in range(sessions)]

        lock = threading.Lock()
        stats = {"requests": 0, "violations": 0, "bleed": 0, "errors": 0}
        latencies: list[float] = []
        period = sessions / rate
        t_start = time.monotonic() + 0.5

        def agent(i: int) -> None:
            me = agents[i]
            other = agents[(i + 1) % sessions]
            h = {"Authorization": f"Bearer {me['token']}"}
            pool = queries_by_user.get(me["user"]) or [q["text"] for q in world.benchmark["queries"]]
            pick = random.Random(i)
            with httpx.Client(base_url=server.url, timeout=30) as c:
                # A token must never open another session's data.
                probe = c.post("/v1/context/request", json={"session_id": other["session_id"], "query": "status"}, headers=h)
                if probe.status_code < 400:
                    with lock:
                        stats["bleed"] += 1
                k = 0
                while True:
                    at = t_start + (i / sessions) * period + k * period
                    if at - t_start >= duration:
                        break
                    time.sleep(max(0.0, at - time.monotonic()))
                    t0 = time.perf_counter()
                    if k % 4 == 3:
                        op = "send-external-email" if me["role"] == "sales-rep" else "draft-document"
                        r = c.post("/v1/actions", json={"session_id": me["session_id"], "operation": op,
                                                        "payload": {"title": f"note {i}-{k}"}}, headers=h)
                        bad = r.status_code != 200
                    else:
                        r = c.post("/v1/context/request", json={"session_id": me["session_id"],
                                                                "query": pick.choice(pool)}, headers=h)
                        bad = r.status_code != 200
                        if not bad:
                            bad = _check_delivery(cp, world, me, r.json())
                    elapsed = (time.perf_counter() - t0) * 1000.0
                    with lock:
                        stats["requests"] += 1
                        latencies.append(elapsed)
                        if bad:
                            stats["violations"] += 1
                    k += 1

        with ThreadPoolExecutor(max_workers=sessions) as pool_:
            list(pool_.map(agent, range(sessions)))
        # Rate over the whole window, even if the last reply came back early.
        time.sleep(max(0.0, t_start + duration - time.monotonic()))
        elapsed_s = time.monotonic() - t_start

    otps = [rec.otp for rec in cp.engine.out_of_band.records()]
    otp_leaks = sum(1 for body in recorder for otp in otps if otp.encode() in body)
    throughput = stats["requests"] / elapsed_s
    ok = throughput >= 6.0 and stats["violations"] == 0 and stats["bleed"] == 0 and otp_leaks == 0
    return {
        "experiment": "c4",
        "simple_latency": simple,
        "cross_domain_latency": cross,
        "direct_read_latency": latency_stats(direct),
        "concurrent": {
            "sessions": sessions,
            "duration_s": round(elapsed_s, 2),
            "requests": stats["requests"],
            "throughput_qps": round(throughput, 2),
            "latency": latency_stats(latencies),
            "violations": stats["violations"],
            "cross_session_bleed": stats["bleed"],
            "otp_in_responses": otp_leaks,
            "otps_issued": len(otps),
        },
        "passed": ok,
    }


def _check_delivery(cp: ControlPlane, world: World, me: dict, body: dict) -> bool:
    """True when the response shows a violation."""
    if body.get("session_id") != me["session_id"]:
        return True
    session = cp.engine.session(me["session_id"])
    for r in body.get("results", []):
        unit = cp.registry.get_unit(r["unit_id"], r["version"])
        if unit is None or is_leak(unit, session.role, world.permitted_domains(session.user)):
            return True
        if not cp.engine.check_path(session, READ, unit.metadata.domain, unit.metadata.path):
            return True
    return False


# ---------------------------------------------------------------------------
# C5: approval isolation
# ---------------------------------------------------------------------------

ADMIN_CREDENTIAL = "bench-admin-credential"


def run_c5(world: World | None = None, *, wrong_attempts: int = 100) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # starlette's note about its httpx backend
        from fastapi.testclient import TestClient

    from ..service.app import create_admin_app, create_agent_app

    world = world or private_world()
    clock = ManualClock(world.now)
    cp = world.control_plane(clock=clock)
    engine = cp.engine
    recorder: list[bytes] = []
    agent = TestClient(create_agent_app(cp, recorder=recorder))
    admin = TestClient(create_admin_app(cp, ADMIN_CREDENTIAL))
    admin_h = {"X-Admin-Credential": ADMIN_CREDENTIAL}
    cases = []

    def case(name: str, ok: bool, **detail):
        cases.append({"case": name, "passed": bool(ok), **detail})

    def start(user: str = "alice") -> tuple[dict, dict]:
        s = agent.post("/v1/sessions", json={"user": user}).json()
        return s, {"Authorization": f"Bearer {s['token']}"}

    def pending_email(s: dict, h: dict) -> str:
        r = agent.post("/v1/actions", headers=h, json={
            "session_id": s["session_id"], "operation": "send-external-email",
            "payload": {"to": "client@example.com", "body": cp.registry.get_unit(RATES).content}})
        return r.json()["approval_id"]

    def snapshot(approval_id: str) -> tuple:
        a = engine.approval(approval_id)
        emails = sum(1 for e in engine.side_effects if e.operation == "send-external-email")
        return a.state, a.executions, emails

    # 1. every agent endpoint, called with a Tier-3 approval pending, changes nothing and shows no code
    s, h = start()
    apr = pending_email(s, h)
    before = snapshot(apr)
    sid = s["session_id"]
    calls = [
        ("get", f"/v1/approvals/{apr}", None),
        ("post", f"/v1/approvals/{apr}/soft", {"decision": "approve"}),
        ("post", "/v1/actions", {"session_id": sid, "operation": "draft-document", "payload": {"title": "t"}}),
        ("post", "/v1/context/request", {"session_id": sid, "query": "What are our daily rates?"}),
        ("get", "/v1/audit", None),
        ("get", "/v1/health", None),
        ("post", "/v1/sessions", {"user": "alice"}),
        ("post", f"/v1/approvals/{apr}/strong", {"otp": "0"}),
        ("get", f"/admin/v1/otp/{apr}", None),
    ]
    agent_routes = {r.path for r in agent.app.routes if getattr(r, "path", "").startswith("/v1")}
    covered = {"/v1/approvals/{approval_id}", "/v1/approvals/{approval_id}/soft", "/v1/actions",
               "/v1/context/request", "/v1/audit", "/v1/health", "/v1/sessions"}
    for method, url, body in calls:
        getattr(agent, method)(url, headers=h, **({"json": body} if body is not None else {}))
    after = snapshot(apr)
    otp = engine.approval(apr).otp
    exposed = any(otp.encode() in b for b in recorder)
    case("otp_absent_and_state_unchanged", before == after and not exposed,
         endpoints=len(calls), uncovered=sorted(agent_routes - covered - {"/v1/sessions/{session_id}"}))

    # 2. wrong codes are all rejected
    rng = random.Random(5)
    wrong = set()
    while len(wrong) < wrong_attempts:
        code = f"{rng.randrange(10 ** 6):06d}"
        if code != otp:
            wrong.add(code)
    rejected = 0
    for code in sorted(wrong):
        r = admin.post(f"/admin/v1/approvals/{apr}/strong", headers=admin_h, json={"otp": code})
        rejected += r.status_code == 403 and r.json()["error"] == "WrongOtp"
    case("wrong_otps_rejected", rejected == wrong_attempts and engine.approval(apr).state.value == "pending",
         rejected=rejected)

    # 3. Tier 3 cannot be cleared through the Tier 2 path
    r = agent.post(f"/v1/approvals/{apr}/soft", headers=h, json={"decision": "approve"})
    case("tier3_not_via_soft_path", r.status_code == 409 and r.json()["error"] == "WrongTier"
         and engine.approval(apr).executions == 0)

    # 4. the right code works once; replays fail
    effects = len(engine.side_effects)
    code = engine.out_of_band.code_for(apr)
    first = admin.post(f"/admin/v1/approvals/{apr}/strong", headers=admin_h, json={"otp": code})
    again = admin.post(f"/admin/v1/approvals/{apr}/strong", headers=admin_h, json={"otp": code})
    case("replay_rejected", first.status_code == 200 and again.status_code == 409 and again.json()["error"] == "Replay"
         and len(engine.side_effects) == effects + 1)

    # 5. expired codes are rejected
    apr2 = pending_email(s, h)
    clock.advance(engine.otp_ttl + timedelta(seconds=1))
    r = admin.post(f"/admin/v1/approvals/{apr2}/strong", headers=admin_h,
                   json={"otp": engine.out_of_band.code_for(apr2)})
    case("expired_rejected", r.status_code == 410 and engine.approval(apr2).executions == 0)

    # 6. kill switch blocks all subsequent actions, including pending approvals
    apr3 = pending_email(s, h)
    effects = len(engine.side_effects)
    k = admin.post("/admin/v1/killswitch", headers=admin_h, json={"scope": "session", "id": sid})
    after_kill = [
        admin.post(f"/admin/v1/approvals/{apr3}/strong", headers=admin_h,
                   json={"otp": engine.out_of_band.code_for(apr3)}).status_code,
        agent.post("/v1/actions", headers=h, json={"session_id": sid, "operation": "draft-document",
                                                   "payload": {}}).json().get("status"),
        agent.post("/v1/context/request", headers=h, json={"session_id": sid, "query": "rates"}).status_code,
    ]
    case("kill_switch_blocks", k.json().get("killed") == 1 and after_kill[0] >= 400 and after_kill[1] == "refused"
         and after_kill[2] == 403 and len(engine.side_effects) == effects, outcomes=after_kill)

    # 7. channels are separate: no strong route on the agent surface, no agent token on the admin one
    s2, h2 = start("bob")
    apr4 = pending_email(s2, h2)
    agent_strong = agent.post(f"/v1/approvals/{apr4}/strong", headers=h2, json={"otp": engine.out_of_band.code_for(apr4)})
    token_as_admin = admin.post(f"/admin/v1/approvals/{apr4}/strong", headers={"X-Admin-Credential": s2["token"]},
                                json={"otp": engine.out_of_band.code_for(apr4)})
    bearer_on_admin = admin.post("/admin/v1/killswitch", headers=h2, json={"scope": "global"})
    case("channel_separation", agent_strong.status_code in (404, 405) and token_as_admin.status_code == 401
         and bearer_on_admin.status_code == 401 and engine.approval(apr4).state.value == "pending")

    # 8. the audit trail records the code's issue but never the code
    codes = [rec.otp for rec in engine.out_of_band.records()]
    trail = "".join(e.to_json() for e in cp.audit.query())
    issued = len(cp.audit.query(kind=EventKind.OTP_ISSUED))
    case("audit_has_no_otp", issued == len(codes) and not any(c in trail for c in codes)
         and not any(c.encode() in b for b in recorder for c in codes), issued=issued)

    passed = sum(c["passed"] for c in cases)
    return {"experiment": "c5", "cases": cases, "score": f"{passed}/{len(cases)}", "passed": passed == len(cases)}
