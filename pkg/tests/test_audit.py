import json
import threading
from datetime import timedelta

import pytest

from contextk8s.audit import FIELDS, AuditEvent, AuditLog, EventKind, JsonlBackend, MemoryBackend, contains_secret
from contextk8s.errors import AuditBackendFailure, AuditRejected
from contextk8s.permissions import Channel, KillScope

from .conftest import SEED_NOW
from .test_freshness import touch


def test_seq_increments_by_one(clock):
    log = AuditLog(clock=clock)
    assert [log.append(EventKind.SESSION_CREATED, outcome="created") for _ in range(3)] == [1, 2, 3]


def test_thirteen_kinds():
    assert len(EventKind) == 13


def test_forbidden_detail_key():
    with pytest.raises(AuditRejected):
        AuditEvent(EventKind.OTP_ISSUED, detail={"otp": "x"})


def test_registered_secret_is_refused(clock):
    log = AuditLog(clock=clock)
    log.add_secret("493817")
    with pytest.raises(AuditRejected):
        log.append(EventKind.APPROVAL_REJECTED, detail={"candidate": "493817"})
    assert len(log) == 0
    # Longer digit runs that merely contain the code are fine.
    log.append(EventKind.APPROVAL_REJECTED, detail={"ref": "14938170"})
    assert contains_secret("code 493817.", "493817") and not contains_secret("14938170", "493817")


def test_jsonl_key_order_and_rfc3339(tmp_path, clock):
    log = AuditLog(JsonlBackend(tmp_path / "a.jsonl"), clock=clock)
    log.append(EventKind.CONTEXT_DENIED, outcome="fail_closed", user="alice", detail={"b": "2", "a": "1"})
    line = (tmp_path / "a.jsonl").read_text().splitlines()[0]
    obj = json.loads(line)
    assert tuple(obj) == FIELDS
    assert obj["at"] == "2026-03-16T09:00:00Z" and list(obj["detail"]) == ["a", "b"]


def test_jsonl_is_append_only(tmp_path, cp, clock):
    path = tmp_path / "audit.jsonl"
    log = AuditLog(JsonlBackend(path), clock=clock)
    snapshots = []
    for i in range(20):
        log.append(EventKind.CONTEXT_REQUESTED, outcome="received", detail={"i": str(i)})
        clock.advance(1)
        snapshots.append(path.read_bytes())
    for a, b in zip(snapshots, snapshots[1:]):
        assert b.startswith(a) and len(b) > len(a)
    # Reopening continues the sequence without rewriting anything.
    again = AuditLog(JsonlBackend(path), clock=clock)
    assert again.append(EventKind.CONTEXT_REQUESTED) == 21
    assert path.read_bytes().startswith(snapshots[-1])


def test_query_filters(cp, clock):
    alice = cp.open_session("alice")
    bob = cp.open_session("bob")
    cp.route(alice.session_id, "pipeline forecast")
    clock.advance(60)
    cp.route(bob.session_id, "salary bands")
    assert {e.user for e in cp.audit.query(user="alice")} == {"alice"}
    assert all(e.session_id == bob.session_id for e in cp.audit.query(session=bob.session_id))
    assert [e.kind for e in cp.audit.query(kind="session_created")] == [EventKind.SESSION_CREATED] * 2
    late = cp.audit.query(since=SEED_NOW + timedelta(seconds=30))
    assert late and all(e.user == "bob" for e in late)
    assert cp.audit.query() == cp.audit.query(kind=list(EventKind))
    seqs = [e.seq for e in cp.audit.query()]
    assert seqs == list(range(1, len(seqs) + 1))


def test_killed_session_history(cp):
    s = cp.open_session("alice")
    cp.engine.kill_switch(KillScope.session(s.session_id))
    cp.engine.submit_action(s.session_id, "draft-document")
    events = cp.audit.query(session=s.session_id)
    kinds = [e.kind for e in events]
    i = kinds.index(EventKind.SESSION_KILLED)
    assert any(e.outcome == "refused:killed" for e in events[i:])


def test_denial_is_logged_before_return(cp):
    s = cp.open_session("alice")
    d = cp.route(s.session_id, "salary bands for consultants")
    assert cp.audit.query()[-1].seq == d.audit_ref


# -- fail-closed coupling ----------------------------------------------------


@pytest.fixture
def failing(world, clock):
    backend = MemoryBackend()
    cp = world.control_plane(clock=clock, audit=AuditLog(backend, clock=clock))
    return cp, backend


def test_unauditable_route_is_refused(failing):
    cp, backend = failing
    s = cp.open_session("carol")
    backend.fail = True
    n = len(cp.audit)
    with pytest.raises(AuditBackendFailure):
        cp.route(s.session_id, "Henderson deal status")
    assert len(cp.audit) == n


def test_unauditable_action_has_no_side_effect(failing):
    cp, backend = failing
    s = cp.open_session("alice")
    backend.fail = True
    with pytest.raises(AuditBackendFailure):
        cp.engine.submit_action(s.session_id, "draft-document")
    assert cp.engine.side_effects == []


def test_unauditable_session_is_not_created(failing):
    cp, backend = failing
    backend.fail = True
    with pytest.raises(AuditBackendFailure):
        cp.open_session("alice")
    assert cp.engine.sessions() == []


def test_reconcile_records_audit_failure(failing, world):
    cp, backend = failing
    backend.fail = True
    touch(world.root / "data" / "delivery" / "projects" / "henderson" / "status.md", "changed")
    report = cp.reconcile()
    assert report.deltas and any(e.startswith("audit:") for e in report.errors)


# -- completeness ----------------------------------------------------------------


def test_every_operation_emits_an_event(cp, world):
    def count(fn):
        before = len(cp.audit)
        try:
            fn()
        except Exception:
            pass
        return len(cp.audit) - before

    s = cp.open_session("alice")
    assert count(lambda: cp.route(s.session_id, "pipeline")) >= 1
    assert count(lambda: cp.engine.submit_action(s.session_id, "draft-document")) >= 1
    soft = cp.engine.submit_action(s.session_id, "send-internal-msg")
    assert count(lambda: cp.engine.resolve_soft(soft.approval_id, "approve", "alice")) >= 1
    strong = cp.engine.submit_action(s.session_id, "send-external-email")
    assert count(lambda: cp.engine.resolve_strong(strong.approval_id, "000000", Channel.OUT_OF_BAND)) >= 1
    assert count(lambda: cp.engine.kill_switch(KillScope.user("nobody"))) >= 1
    touch(world.root / "data" / "hr" / "policies" / "leave-policy.md", "changed")
    assert count(cp.reconcile) >= 1


def test_otp_issued_event_carries_only_the_approval_id(cp):
    s = cp.open_session("alice")
    r = cp.engine.submit_action(s.session_id, "send-external-email")
    ev = cp.audit.query(kind=EventKind.OTP_ISSUED)[-1]
    assert set(ev.detail) == {"approval_id"} and ev.detail["approval_id"] == r.approval_id


def test_concurrent_appends_are_gapless(clock):
    log = AuditLog(clock=clock)

    def spam():
        for _ in range(250):
            log.append(EventKind.CONTEXT_REQUESTED)

    threads = [threading.Thread(target=spam) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert [e.seq for e in log.query()] == list(range(1, 2001))
