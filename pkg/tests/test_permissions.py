from datetime import timedelta

import pytest

from contextk8s.audit import EventKind
from contextk8s.bench.seed import DEAL, HEND_PROFILE, MANIFESTS, SALARY
from contextk8s.errors import (
    EqualSetViolation,
    Expired,
    NotPending,
    Replay,
    SessionKilled,
    SupersetViolation,
    TierViolation,
    WrongChannel,
    WrongOtp,
    WrongTier,
)
from contextk8s.manifest import parse_manifest
from contextk8s.permissions import (
    READ,
    WRITE,
    ActionStatus,
    AgentProfile,
    ApprovalState,
    Channel,
    KillScope,
    PermissionEngine,
    UserRole,
    derive_agent_profile,
    derive_user_role,
    rbac_profile,
)
from contextk8s.tiers import Tier

HR = parse_manifest(MANIFESTS["hr"])


def engine():
    return PermissionEngine({"hr": HR})


def profile(ops, tiers=None, agent_id="agent-grace"):
    tiers = tiers or {}
    return AgentProfile(agent_id, "grace", "hr-manager", "hr", frozenset(ops),
                        {o: tiers.get(o, Tier.SOFT_APPROVAL) for o in ops})


# -- registration ------------------------------------------------------------


def test_hr_agent_loses_terminate_employee():
    role = derive_user_role(HR, "hr-manager")
    assert "terminate-employee" in role.operations
    p = derive_agent_profile(HR, "hr-manager", "grace", "agent-grace")
    assert p.operations == role.operations - {"terminate-employee"}
    assert "terminate-employee" in p.excluded
    assert engine().register_agent_profile(p, role) is p


def test_equal_set_rejected():
    role = derive_user_role(HR, "hr-manager")
    with pytest.raises(EqualSetViolation):
        engine().register_agent_profile(profile(role.operations), role)


def test_superset_rejected():
    role = derive_user_role(HR, "hr-manager")
    with pytest.raises(SupersetViolation):
        engine().register_agent_profile(profile({READ, "wire-money"}), role)


def test_less_restrictive_tier_rejected():
    role = UserRole("hr-manager", "hr", operations=frozenset({READ, "send-email", "x"}),
                    tier_of={"send-email": Tier.SOFT_APPROVAL})
    with pytest.raises(TierViolation):
        engine().register_agent_profile(profile({"send-email"}, {"send-email": Tier.AUTONOMOUS}), role)


def test_rejection_is_atomic():
    e = engine()
    role = derive_user_role(HR, "hr-manager")
    with pytest.raises(EqualSetViolation):
        e.register_agent_profile(profile(role.operations, agent_id="agent-x"), role)
    assert e.profiles() == []


def test_rbac_mode_skips_the_check():
    e = PermissionEngine({"hr": HR}, mode="rbac")
    role = derive_user_role(HR, "hr-manager")
    p = rbac_profile(HR, "hr-manager", "grace", "agent-grace")
    assert p.operations == role.operations
    e.register_agent_profile(p, role)


# -- access checks -------------------------------------------------------------


def test_sales_rep_reads_assigned_client(cp):
    s = cp.open_session("alice")
    assert cp.engine.check_access(s, READ, cp.registry.get_unit(DEAL))
    assert cp.engine.check_path(s, READ, "sales", "clients/henderson/notes.md")


def test_sales_rep_other_client_denied(cp):
    s = cp.open_session("bob")  # assigned meridian
    d = cp.engine.check_path(s, READ, "sales", "clients/henderson/notes.md")
    assert not d and d.reason == "path"
    assert not cp.engine.check_access(s, READ, cp.registry.get_unit(DEAL))


def test_cross_domain_denied(cp):
    s = cp.open_session("alice")
    d = cp.engine.check_access(s, READ, cp.registry.get_unit(SALARY))
    assert not d


def test_brokered_read_uses_requester_scope(cp):
    assert cp.engine.check_access(cp.open_session("alice"), READ, cp.registry.get_unit(HEND_PROFILE))
    assert not cp.engine.check_access(cp.open_session("bob"), READ, cp.registry.get_unit(HEND_PROFILE))


def test_engine_down_denies(cp):
    s = cp.open_session("carol")
    cp.engine.set_available(False)
    d = cp.engine.check_access(s, READ, cp.registry.get_unit(DEAL))
    assert d.reason == "fail_closed"
    assert cp.engine.check_path(s, READ, "sales", "pipeline/x.md").reason == "fail_closed"


# -- classification and submission ------------------------------------------


@pytest.mark.parametrize(
    "op,payload,tier",
    [
        ("send-external-email", {}, Tier.STRONG_APPROVAL),
        ("write", {"path": "pipeline/q3.md"}, Tier.AUTONOMOUS),
        ("write", {"path": "clients/contracts/msa.md"}, Tier.STRONG_APPROVAL),
        ("commit-to-pricing", {}, Tier.EXCLUDED),
        ("launch-rockets", {}, Tier.EXCLUDED),
        ("draft-document", {}, Tier.AUTONOMOUS),
        ("send-internal-msg", {}, Tier.SOFT_APPROVAL),
    ],
)
def test_classify_action(cp, op, payload, tier):
    assert cp.engine.classify_action(cp.open_session("alice"), op, payload) is tier


def test_draft_executes_immediately(cp):
    s = cp.open_session("alice")
    r = cp.engine.submit_action(s.session_id, "draft-document", {"title": "note"})
    assert r.status is ActionStatus.EXECUTED
    assert [e.operation for e in cp.engine.side_effects] == ["draft-document"]


def test_soft_path(cp):
    s = cp.open_session("alice")
    r = cp.engine.submit_action(s.session_id, "send-internal-msg", {"to": "carol"})
    assert r.status is ActionStatus.PENDING and cp.engine.side_effects == []
    res = cp.engine.resolve_soft(r.approval_id, "approve", "alice")
    assert res.executed and res.state is ApprovalState.APPROVED
    with pytest.raises(NotPending):
        cp.engine.resolve_soft(r.approval_id, "approve", "alice")
    assert len(cp.engine.side_effects) == 1


def test_soft_reject_is_terminal(cp):
    s = cp.open_session("alice")
    r = cp.engine.submit_action(s.session_id, "send-internal-msg", {})
    assert cp.engine.resolve_soft(r.approval_id, "reject", "alice").state is ApprovalState.REJECTED
    with pytest.raises(NotPending):
        cp.engine.resolve_soft(r.approval_id, "approve", "alice")
    assert cp.engine.side_effects == []


def test_excluded_is_refused(cp):
    s = cp.open_session("alice")
    r = cp.engine.submit_action(s.session_id, "commit-to-pricing", {})
    assert r.status is ActionStatus.REFUSED and r.reason == "excluded"


def test_sign_contract_stays_pending_without_code(cp):
    s = cp.open_session("carol")
    r = cp.engine.submit_action(s.session_id, "sign-contract", {"client": "henderson"})
    assert r.status is ActionStatus.PENDING and r.tier is Tier.STRONG_APPROVAL
    assert cp.engine.approval(r.approval_id).state is ApprovalState.PENDING
    assert cp.engine.side_effects == []


# -- strong approval -----------------------------------------------------------


@pytest.fixture
def strong(cp):
    s = cp.open_session("alice")
    r = cp.engine.submit_action(s.session_id, "send-external-email", {"to": "client@example.com"})
    return cp, r.approval_id, cp.engine.out_of_band.code_for(r.approval_id)


def test_correct_code_approves(strong):
    cp, aid, code = strong
    res = cp.engine.resolve_strong(aid, code, Channel.OUT_OF_BAND)
    assert res.executed and res.state is ApprovalState.CONSUMED


def test_hundred_wrong_codes(strong):
    cp, aid, code = strong
    wrong = [f"{(int(code) + k) % 1_000_000:06d}" for k in range(1, 101)]
    rejected = 0
    for w in wrong:
        with pytest.raises(WrongOtp):
            cp.engine.resolve_strong(aid, w, Channel.OUT_OF_BAND)
        rejected += 1
    a = cp.engine.approval(aid)
    assert rejected == 100 and a.state is ApprovalState.PENDING and a.attempts == 100
    assert cp.engine.side_effects == []


def test_replay_rejected(strong):
    cp, aid, code = strong
    cp.engine.resolve_strong(aid, code, Channel.OUT_OF_BAND)
    with pytest.raises(Replay):
        cp.engine.resolve_strong(aid, code, Channel.OUT_OF_BAND)
    assert len(cp.engine.side_effects) == 1


def test_expired(strong, clock):
    cp, aid, code = strong
    clock.advance(301)
    with pytest.raises(Expired):
        cp.engine.resolve_strong(aid, code, Channel.OUT_OF_BAND)
    assert cp.engine.approval(aid).state is ApprovalState.EXPIRED


def test_agent_channel_refused(strong):
    cp, aid, code = strong
    with pytest.raises(WrongChannel):
        cp.engine.resolve_strong(aid, code, Channel.AGENT)


def test_strong_via_soft_path(strong):
    cp, aid, _ = strong
    with pytest.raises(WrongTier):
        cp.engine.resolve_soft(aid, "approve", "alice")
    assert cp.engine.approval(aid).state is ApprovalState.PENDING


def test_code_is_six_digits_and_kept_out_of_public_view(strong):
    cp, aid, code = strong
    assert len(code) == 6 and code.isdigit()
    assert code not in repr(cp.engine.approval_status(aid))
    assert code not in repr(cp.engine.approval(aid))


# -- kill switch ---------------------------------------------------------------


def test_kill_user_counts(cp):
    for _ in range(3):
        cp.open_session("alice")
    cp.open_session("bob")
    assert cp.engine.kill_switch(KillScope.user("alice")) == 3
    assert sum(s.live for s in cp.engine.sessions()) == 1


def test_kill_is_absorbing(cp):
    s = cp.open_session("alice")
    cp.engine.kill_switch(KillScope.session(s.session_id))
    assert not cp.engine.check_access(s, READ, cp.registry.get_unit(DEAL))
    assert cp.engine.submit_action(s.session_id, "draft-document").status is ActionStatus.REFUSED
    with pytest.raises(SessionKilled):
        cp.route(s.session_id, "pipeline")
    cp.engine.update_scope(s.session_id, assigned=["henderson"])
    assert not cp.engine.session(s.session_id).live


def test_global_kill(cp):
    s = cp.open_session("alice")
    r = cp.engine.submit_action(s.session_id, "send-external-email", {})
    code = cp.engine.out_of_band.code_for(r.approval_id)
    assert cp.engine.kill_switch(KillScope.all()) == 1
    with pytest.raises(NotPending):
        cp.engine.resolve_strong(r.approval_id, code, Channel.OUT_OF_BAND)
    with pytest.raises(SessionKilled):
        cp.open_session("bob")
    assert cp.engine.side_effects == []
    kinds = [e.kind for e in cp.audit.query()]
    assert EventKind.SESSION_KILLED in kinds and EventKind.APPROVAL_REJECTED in kinds


def test_session_ids_are_letters(cp):
    s = cp.open_session("alice")
    assert s.session_id.startswith("ses-") and s.session_id[4:].isalpha()
    assert s.token.startswith("tok-") and s.token[4:].isalpha()


def test_write_tier_from_path(cp):
    s = cp.open_session("alice")
    r = cp.engine.submit_action(s.session_id, WRITE, {"path": "pipeline/q4.md", "content": "draft"})
    assert r.status is ActionStatus.EXECUTED
    assert (cp.reconciler.connection("sales", "sales-docs").read("pipeline/q4.md").content) == "draft"


def test_otp_ttl_default():
    assert PermissionEngine({}).otp_ttl == timedelta(seconds=300)
