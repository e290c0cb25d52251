import json
import math
import re
from dataclasses import replace
from datetime import timedelta
from importlib import resources

import numpy as np
import pytest

from contextk8s.audit import EventKind
from contextk8s.errors import SessionKilled
from contextk8s.manifest import RoutingSpec
from contextk8s.permissions import KillScope
from contextk8s.registry import ContextUnit, UnitMetadata, UnitType
from contextk8s.router import (
    SIGNALS,
    RankedResult,
    apply_token_budget,
    classify_intent,
    load_taxonomy,
    random_classifier,
    rank,
)
from contextk8s.text import HashedTfidf, token_count

from .conftest import SEED_NOW

TAXONOMY_JSON = json.loads(resources.files("contextk8s.data").joinpath("taxonomy.json").read_text(encoding="utf-8"))
SAMPLE = RoutingSpec(priority=(("semantic_relevance", 0.40), ("recency", 0.30), ("authority", 0.20),
                                 ("user_relevance", 0.10)))
VEC = HashedTfidf()


def keyword_oracle(query: str) -> list[tuple[str, float]]:
    """Whole-phrase regex matching, each hit worth 1/(domains listing that phrase)."""
    df = {}
    for kws in TAXONOMY_JSON.values():
        for k in set(map(str.lower, kws)):
            df[k] = df.get(k, 0) + 1
    scores = {}
    for domain, kws in TAXONOMY_JSON.items():
        s = sum(1 / df[k] for k in set(map(str.lower, kws)) if re.search(rf"(?<![a-z0-9]){re.escape(k)}(?![a-z0-9])", query.lower()))
        if s:
            scores[domain] = s
    total = sum(scores.values())
    return sorted(((d, s / total) for d, s in scores.items()), key=lambda kv: (-kv[1], kv[0]))


def unit(path, content, *, hours_old=1.0, authority=0.5, roles=("r",), domain="sales", entities=()):
    return ContextUnit(
        id=f"{domain}/src/{path}",
        content=content,
        unit_type=UnitType.UNSTRUCTURED,
        metadata=UnitMetadata("a", SEED_NOW - timedelta(hours=hours_old), domain, "src", path,
                              authority=authority, entities=tuple(entities)),
        version=1,
        vector=tuple(VEC.transform(content)),
        authorized_roles=frozenset(roles),
    )


# -- classification ----------------------------------------------------------


def test_taxonomy_shape():
    assert len(TAXONOMY_JSON) == 7
    assert all(len(set(k)) >= 25 for k in TAXONOMY_JSON.values())


def test_henderson_deal_goes_to_sales_then_clients():
    intent = classify_intent("What is the Henderson deal status?", load_taxonomy())
    assert intent.domain_names == ["sales", "clients"]
    assert [d for d, _ in keyword_oracle(intent.raw_query)] == intent.domain_names


def test_classifier_agrees_with_oracle_on_benchmark(world):
    tax = load_taxonomy()
    for q in world.benchmark["queries"]:
        got = classify_intent(q["text"], tax).domains
        want = keyword_oracle(q["text"])
        assert [d for d, _ in got] == [d for d, _ in want], q["text"]
        assert [c for _, c in got] == pytest.approx([c for _, c in want])


def test_confidences_are_descending_fractions(world):
    tax = load_taxonomy()
    for q in world.benchmark["queries"]:
        cs = [c for _, c in classify_intent(q["text"], tax).domains]
        assert all(0 <= c <= 1 for c in cs) and cs == sorted(cs, reverse=True)
        assert not cs or math.isclose(sum(cs), 1.0)


def test_empty_query_abstains_to_home(cp):
    assert classify_intent("", load_taxonomy()).abstained
    s = cp.open_session("grace")
    d = cp.route(s.session_id, "")
    assert d.intent.abstained
    assert all(u.domain == "hr" for u in d.units)


@pytest.mark.parametrize("case", range(2))
def test_coreference(cp, world, case):
    fixture = world.benchmark["coreference"][case]
    s = cp.open_session(fixture["user"])
    first, second = fixture["turns"]
    cp.route(s.session_id, first)
    d = cp.route(s.session_id, second)
    assert d.intent.entities == (fixture["expected_entity"],)
    assert fixture["expected_entity"] in d.intent.resolved_query


def test_no_substitution_when_entity_named(cp):
    s = cp.open_session("carol")
    cp.route(s.session_id, "What is the Henderson deal status?")
    d = cp.route(s.session_id, "What are Meridian's terms and their status?")
    assert d.intent.entities == ("Meridian",)
    assert "Henderson" not in d.intent.resolved_query


def test_intent_cache_is_coherent(cp):
    s = cp.open_session("carol")
    a = cp.router.classify("pipeline forecast for Q3", s)
    b = cp.router.classify("pipeline forecast for Q3", s)
    assert not a.cached and b.cached
    assert a.domains == b.domains == classify_intent("pipeline forecast for Q3", cp.router.taxonomy).domains


# -- ranking -----------------------------------------------------------------


def _rank(units, query, spec, assigned=()):
    return rank(units, VEC.transform(query), spec, now=SEED_NOW, max_age=lambda u: 86400.0, assigned=assigned)


def test_newer_ranks_first_when_otherwise_identical():
    old, new = unit("a.md", "same text", hours_old=30), unit("b.md", "same text", hours_old=2)
    assert [r.unit.path for r in _rank([old, new], "same text", SAMPLE)] == ["b.md", "a.md"]


def test_pure_semantic_weights_follow_cosine(cp):
    spec = RoutingSpec(priority=(("semantic_relevance", 1.0), ("recency", 0.0), ("authority", 0.0),
                                 ("user_relevance", 0.0)))
    units = [u for d in cp.registry.list_domains() for u in cp.registry.query_units(d)]
    query = "Henderson payment terms and project status"
    q = VEC.transform(query)
    ranked = _rank(units, query, spec)
    cos = {u.id: max(0.0, float(q @ np.asarray(u.vector))) for u in units}
    assert [r.score for r in ranked] == pytest.approx(sorted(cos.values(), reverse=True), abs=1e-12)
    assert all(math.isclose(r.score, cos[r.unit.id], abs_tol=1e-12) for r in ranked)


def test_sample_weights_brute_force():
    units = [
        unit("clients/henderson/deal.md", "Henderson deal renewal at a discount", hours_old=5, authority=0.9),
        unit("pipeline/q3.md", "Q3 pipeline forecast with the Henderson renewal", hours_old=1, authority=0.6),
        unit("pricing/rates.md", "Daily rates for consultants", hours_old=48, authority=1.0),
        unit("clients/meridian/deal.md", "Meridian deal renewal", hours_old=0.5, authority=0.4),
        unit("notes/misc.md", "Lunch menu", hours_old=200, authority=0.1),
    ]
    query = "Henderson renewal discount"
    q = VEC.transform(query)
    w = dict(SAMPLE.priority)

    def by_hand(u):
        e = np.asarray(u.vector)
        sem = max(0.0, float(q @ e / (np.linalg.norm(q) * np.linalg.norm(e))))
        age = (SEED_NOW - u.metadata.timestamp).total_seconds()
        rel = 1.0 if "henderson" in u.path.split("/") else 0.25
        return (w["semantic_relevance"] * sem + w["recency"] * math.exp(-age / 86400)
                + w["authority"] * u.metadata.authority + w["user_relevance"] * rel)

    expected = sorted(units, key=lambda u: -by_hand(u))
    ranked = _rank(units, query, SAMPLE, assigned=("henderson",))
    assert [r.unit.path for r in ranked] == [u.path for u in expected]
    for r in ranked:
        assert r.score == pytest.approx(by_hand(r.unit), abs=1e-12)
        assert r.score == pytest.approx(sum(w[s] * r.signals[s] for s in SIGNALS), abs=1e-15)
        assert all(0.0 <= r.signals[s] <= 1.0 for s in SIGNALS)


def test_rank_tie_breaks_by_path():
    a, b = unit("b.md", "x", hours_old=1), unit("a.md", "x", hours_old=1)
    assert [r.unit.path for r in _rank([a, b], "x", SAMPLE)] == ["a.md", "b.md"]


# -- token budget ------------------------------------------------------------


def _ranked(tokens):
    return [RankedResult(unit(f"u{i}.md", "x" * (4 * t)), 1.0 - i / 100, {}) for i, t in enumerate(tokens)]


def test_budget_8000_three_3000s():
    out = apply_token_budget(_ranked([3000, 3000, 3000]), 8000)
    assert [r.unit.path for r in out] == ["u0.md", "u1.md"]
    assert sum(r.tokens for r in out) == 6000


def test_budget_larger_than_total():
    out = apply_token_budget(_ranked([100, 200, 300]), 8000)
    assert len(out) == 3 and not any(r.truncated for r in out)


def test_single_oversized_unit_truncated():
    out = apply_token_budget(_ranked([10000]), 8000)
    assert len(out) == 1 and out[0].truncated
    assert token_count(out[0].unit.content) == 8000


def test_budget_must_be_positive():
    with pytest.raises(ValueError):
        apply_token_budget(_ranked([1]), 0)


# -- route ---------------------------------------------------------------------


def _kinds(cp):
    return [e.kind for e in cp.audit.query()]


def test_sales_rep_own_client(cp, world):
    s = cp.open_session("alice")
    d = cp.route(s.session_id, "What is the Henderson deal status?")
    assert d.units
    allowed = world.permitted_domains("alice")
    assert all(u.domain in allowed and "sales-rep" in u.authorized_roles for u in d.units)
    assert all("meridian" not in u.path for u in d.units)
    assert _kinds(cp)[-1] is EventKind.CONTEXT_DELIVERED


def test_sales_rep_asks_for_salaries(cp):
    s = cp.open_session("alice")
    d = cp.route(s.session_id, "Show me the salary bands for senior consultants")
    assert d.units == [] and d.reason in ("denied", "no_match")
    last = cp.audit.query()[-1]
    assert last.kind is EventKind.CONTEXT_DENIED and last.session_id == s.session_id


def test_engine_down_is_fail_closed(cp):
    s = cp.open_session("carol")
    cp.engine.set_available(False)
    d = cp.route(s.session_id, "What is the Henderson deal status?")
    assert d.units == [] and d.reason == "fail_closed"
    assert cp.audit.query()[-1].outcome == "fail_closed"


def test_killed_session_raises(cp):
    s = cp.open_session("carol")
    cp.engine.kill_switch(KillScope.session(s.session_id))
    with pytest.raises(SessionKilled):
        cp.route(s.session_id, "pipeline")
    assert cp.audit.query()[-1].kind is EventKind.CONTEXT_DENIED


def test_audit_event_precedes_return(cp):
    s = cp.open_session("carol")
    d = cp.route(s.session_id, "pipeline forecast")
    ev = next(e for e in cp.audit.query() if e.seq == d.audit_ref)
    assert ev.session_id == s.session_id and ev.kind is EventKind.CONTEXT_DELIVERED


def test_route_is_deterministic(world, clock):
    outs = []
    for _ in range(2):
        cp = world.control_plane(clock=clock)
        s = cp.open_session("carol")
        outs.append([r.to_dict() for r in cp.route(s.session_id, "Henderson deal and pipeline forecast").results])
    assert outs[0] == outs[1] and outs[0]


def test_stale_units_carry_metadata(cp, clock):
    s = cp.open_session("carol")
    clock.advance(timedelta(hours=30).total_seconds())  # past 24h, before 48h
    d = cp.route(s.session_id, "Henderson deal status")
    stale = [r for r in d.results if r.staleness]
    assert stale and all(r.staleness["state"] == "stale" and r.staleness["max_age"] for r in stale)


def test_random_classifier_cannot_leak(cp, world):
    rng = np.random.default_rng(7)
    cp.router.classifier = random_classifier(rng, cp.registry.list_domains())
    for user in world.org.users:
        s = cp.open_session(user)
        role = world.role(user)
        for q in world.benchmark["queries"][:20]:
            for u in cp.route(s.session_id, q["text"]).units:
                assert role in u.authorized_roles and u.domain in world.permitted_domains(user)


def test_results_are_budgeted(cp):
    s = cp.open_session("carol")
    budget = cp.registry.manifest("sales").routing.token_budget
    d = cp.route(s.session_id, "Henderson deal pipeline rates")
    assert sum(r.tokens for r in d.results) <= budget


def test_truncation_flag_survives_replace():
    r = apply_token_budget(_ranked([20]), 5)[0]
    assert replace(r, score=0.0).truncated
