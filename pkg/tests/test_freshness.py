import os
import random
import shutil
import threading
from dataclasses import replace
from datetime import timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from contextk8s.bench.seed import DEAL, HEND_STATUS, MANIFESTS, PIPELINE, RATES, SOURCES
from contextk8s.freshness.state import (
    EXPIRED_FACTOR,
    FreshnessRecord,
    FreshnessState,
    freshness_state,
    parse_delta_type,
    resolve_conflict,
)
from contextk8s.manifest import FreshnessPolicy, parse_manifest
from contextk8s.permissions import READ
from contextk8s.registry import SourceStatus

from .conftest import SEED_NOW
from .test_registry import make_unit

HOUR = timedelta(hours=1)


def record(max_age=HOUR, live=1, forced=False):
    return FreshnessRecord("u", FreshnessState.FRESH, SEED_NOW, FreshnessPolicy(max_age, "re-sync"), live, forced)


def data_file(world, uid):
    domain, _, path = uid.split("/", 2)
    return world.root / SOURCES[domain][2] / path


_bump = [0]


def touch(path, text):
    """Rewrite ``path`` with a strictly later mtime so polling always notices."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    _bump[0] += 1
    t = 2_000_000_000 + _bump[0]
    os.utime(path, (t, t))


# -- state machine -----------------------------------------------------------


@pytest.mark.parametrize(
    "age,state",
    [
        (timedelta(0), FreshnessState.FRESH),
        (HOUR, FreshnessState.FRESH),
        (timedelta(minutes=90), FreshnessState.STALE),
        (2 * HOUR, FreshnessState.STALE),
        (3 * HOUR, FreshnessState.EXPIRED),
    ],
)
def test_thresholds(age, state):
    assert EXPIRED_FACTOR == 2
    assert freshness_state(record(), SEED_NOW + age) is state


def test_two_live_versions_conflicted_regardless_of_age():
    for age in (timedelta(0), 10 * HOUR):
        assert freshness_state(record(live=2), SEED_NOW + age) is FreshnessState.CONFLICTED


def test_forced_stale_floor():
    assert freshness_state(record(forced=True), SEED_NOW) is FreshnessState.STALE
    assert freshness_state(record(forced=True), SEED_NOW + 3 * HOUR) is FreshnessState.EXPIRED


_ORDER = {FreshnessState.FRESH: 0, FreshnessState.STALE: 1, FreshnessState.EXPIRED: 2}


@given(st.integers(1, 10_000), st.lists(st.integers(0, 50_000), min_size=2, max_size=20), st.booleans())
def test_state_never_improves_with_time(max_age_min, offsets, forced):
    rec = record(timedelta(minutes=max_age_min), forced=forced)
    states = [freshness_state(rec, SEED_NOW + timedelta(minutes=m)) for m in sorted(offsets)]
    ranks = [_ORDER[s] for s in states]
    assert ranks == sorted(ranks)


def test_delta_parser_knows_out_of_scope_kinds():
    assert not parse_delta_type("anomaly").implemented
    assert parse_delta_type("permission_change").implemented
    with pytest.raises(ValueError):
        parse_delta_type("meteor")


# -- conflicts -----------------------------------------------------------------


def _versioned(content, hours, version):
    u = make_unit(content=content)
    return replace(u, version=version, metadata=replace(u.metadata, timestamp=SEED_NOW + timedelta(hours=hours)))


def test_newest_report_wins():
    on_track, at_risk = _versioned("on track", 0, 1), _versioned("at risk", 2, 2)
    assert resolve_conflict([on_track, at_risk]).content == "at risk"
    assert resolve_conflict([at_risk, on_track]).content == "at risk"


def test_single_version_identity():
    u = _versioned("x", 0, 1)
    assert resolve_conflict([u]) is u


def test_timestamp_tie_prefers_higher_version():
    assert resolve_conflict([_versioned("b", 1, 2), _versioned("a", 1, 1)]).version == 2
    with pytest.raises(ValueError):
        resolve_conflict([])


# -- reconciliation --------------------------------------------------------


def test_upstream_update_resyncs_in_one_cycle(cp, world):
    f = data_file(world, HEND_STATUS)
    touch(f, f.read_text() + "\nUpdate: phase two signed off.\n")
    report = cp.reconcile()
    assert "context_stale" in report.delta_types()
    u = cp.registry.get_unit(HEND_STATUS)
    assert u.version == 2 and "phase two signed off" in u.content
    assert len(cp.registry.live_versions(HEND_STATUS)) == 1
    assert cp.registry.freshness_record(HEND_STATUS).state is FreshnessState.FRESH


def test_flag_policy_marks_unit(cp, world):
    f = data_file(world, DEAL)
    touch(f, f.read_text() + "\nrevised\n")
    cp.reconcile()
    assert cp.registry.is_flagged(DEAL)
    assert cp.registry.get_unit(DEAL).version == 1


def test_source_removed(cp, world):
    shutil.move(world.root / "data" / "delivery", world.root / "elsewhere")
    report = cp.reconcile()
    assert "source_disconnected" in report.delta_types()
    assert cp.registry.source_state("delivery-docs", "delivery").status is SourceStatus.DISCONNECTED
    assert cp.registry.freshness_record(HEND_STATUS).state is FreshnessState.STALE
    # A dark domain never aborts the cycle and recovers when the tree returns.
    shutil.move(world.root / "elsewhere", world.root / "data" / "delivery")
    cp.reconcile()
    assert cp.registry.source_state("delivery-docs", "delivery").status is SourceStatus.CONNECTED
    assert cp.registry.freshness_record(HEND_STATUS).state is FreshnessState.FRESH


def test_permission_revocation_reaches_live_session(cp):
    s = cp.open_session("alice")
    assert cp.engine.check_access(s, READ, cp.registry.get_unit(RATES))
    edited = MANIFESTS["sales"].replace(
        'read: ["clients/${assigned}/*", "pipeline/*", "pricing/*"]', 'read: ["clients/${assigned}/*", "pipeline/*"]'
    )
    assert edited != MANIFESTS["sales"]
    cp.apply(parse_manifest(edited))
    report = cp.reconcile()
    assert "permission_change" in report.delta_types()
    assert not cp.engine.check_access(s, READ, cp.registry.get_unit(RATES))
    assert "sales-rep" not in cp.registry.get_unit(RATES).authorized_roles
    assert cp.engine.check_access(s, READ, cp.registry.get_unit(PIPELINE))


def test_every_delta_has_one_action_and_one_audit_event(cp, world):
    touch(data_file(world, HEND_STATUS), "new status")
    touch(data_file(world, DEAL), "new deal")
    before = len(cp.audit.query())
    report = cp.reconcile()
    assert len(report.deltas) == len(report.actions) - sum(
        a["action"] in ("resolve_conflict", "ingest", "register_domain", "resync_source", "update_manifest")
        for a in report.actions
    )
    deltas = [e for e in cp.audit.query()[before:] if e.kind.value == "reconcile_delta" and "type" in e.detail]
    assert len(deltas) == len(report.deltas)


def test_deleted_file_unroutable_within_two_cycles(cp, world):
    s = cp.open_session("dave")
    data_file(world, HEND_STATUS).unlink()
    for _ in range(2):
        cp.reconcile()
    assert cp.registry.live_versions(HEND_STATUS) == []
    d = cp.route(s.session_id, "Henderson project status")
    assert HEND_STATUS not in {u.id for u in d.units}


def test_cycle_report_shape(cp):
    r = cp.reconcile().to_dict()
    assert list(r)[:5] == ["cycle_id", "started_at", "duration_ms", "deltas", "actions"]
    assert len(r["sources"]) == 5


def test_cycle_survives_connector_errors(cp, world):
    shutil.rmtree(world.root / "data")
    report = cp.reconcile()
    assert sorted(report.delta_types()) == ["source_disconnected"] * 5


# -- loop ------------------------------------------------------------------------


def test_stop_before_first_cycle(cp):
    stop = threading.Event()
    stop.set()
    assert list(cp.reconciler.iter_cycles(1.0, stop)) == []
    with pytest.raises(ValueError):
        next(cp.reconciler.iter_cycles(0, threading.Event()))


def test_background_loop(cp):
    seen = []
    done = threading.Event()

    def on_report(r):
        seen.append(r)
        if len(seen) >= 3:
            done.set()

    cp.reconciler.start(0.01, on_report)
    assert cp.reconciler.running
    assert done.wait(10)
    cp.reconciler.stop()
    assert not cp.reconciler.running
    assert [r.cycle_id for r in seen] == sorted(r.cycle_id for r in seen)


# -- liveness under random faults -------------------------------------------------


def test_liveness_randomized(cp, world, clock):
    rng = random.Random(1234)
    uids = [u for u in cp.registry.unit_ids()]
    interval = timedelta(seconds=5)

    def cycle():
        clock.advance(interval.total_seconds())
        return cp.reconcile()

    for trial in range(100):
        fault = rng.choice(["modify", "disconnect", "delete"])
        if fault == "modify":
            uid = rng.choice([u for u in uids if cp.registry.live_versions(u)])
            touch(data_file(world, uid), f"revision {trial}\n")
            hits = [d for _ in range(2) for d in cycle().deltas if d["target"] == uid]
            assert hits and hits[0]["type"] == "context_stale", (trial, uid)
        elif fault == "disconnect":
            domain = rng.choice(sorted(SOURCES))
            src, _, rel = SOURCES[domain]
            shutil.move(world.root / rel, world.root / "parked")
            report = cycle()
            assert f"{domain}/{src}" in [d["target"] for d in report.deltas if d["type"] == "source_disconnected"]
            shutil.move(world.root / "parked", world.root / rel)
            cycle()
            assert cp.registry.source_state(src, domain).status is SourceStatus.CONNECTED
        else:
            uid = rng.choice([u for u in uids if cp.registry.live_versions(u)])
            path = data_file(world, uid)
            text = path.read_text()
            path.unlink()
            cycle()
            cycle()
            assert cp.registry.live_versions(uid) == [], (trial, uid)
            touch(path, text)
            cycle()
            assert cp.registry.live_versions(uid), (trial, uid)


def test_no_expired_unit_is_ever_delivered(cp, clock, world):
    sessions = [cp.open_session(u) for u in world.org.users]
    queries = [q["text"] for q in world.benchmark["queries"][::7]]
    for hours in (0, 20, 30, 47, 49, 100, 24 * 8, 24 * 15):
        now = SEED_NOW + timedelta(hours=hours)
        for s in sessions:
            for q in queries:
                for r in cp.route(s.session_id, q, now=now).results:
                    rec = cp.registry.freshness_record(r.unit.id, now)
                    assert r.freshness is not FreshnessState.EXPIRED
                    assert rec is not None and rec.state is not FreshnessState.EXPIRED
                    if r.freshness is FreshnessState.STALE:
                        assert r.staleness and r.staleness["state"] == "stale"
