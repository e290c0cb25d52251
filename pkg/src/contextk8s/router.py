"""Intent classification, ranking and token budgeting: the context endpoint.

The router trusts nothing it is handed. Every candidate passes through the
permission engine and the freshness filter before it can be ranked, so a
wrong classification only costs relevance, never confidentiality.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import threading
from dataclasses import dataclass, replace
from datetime import datetime
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .audit import EventKind
from .errors import SessionKilled
from .freshness.state import FreshnessState
from .manifest import RoutingSpec
from .permissions import READ, PermissionEngine, Session, letter_digest
from .registry import ContextUnit, Registry
from .text import HashedTfidf, cosine, token_count, truncate_to_tokens, words
from .timeutil import SystemClock, format_duration, to_rfc3339, utc

SIGNALS = ("semantic_relevance", "recency", "authority", "user_relevance")
USER_RELEVANCE_BASELINE = 0.25

PRONOUNS = frozenset({"they", "them", "their", "theirs", "it", "its", "he", "she", "him", "his", "her", "hers"})


# ---------------------------------------------------------------------------
# Taxonomy and intent
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Taxonomy:
    keywords: Mapping[str, frozenset[str]]
    version: str

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Iterable[str]]) -> "Taxonomy":
        kw = {d: frozenset(k.lower() for k in ks) for d, ks in mapping.items()}
        blob = json.dumps({d: sorted(k) for d, k in sorted(kw.items())}).encode()
        return cls(kw, hashlib.sha256(blob).hexdigest()[:12])

    @property
    def domains(self) -> list[str]:
        return sorted(self.keywords)

    def specificity(self, keyword: str) -> float:
        n = sum(1 for ks in self.keywords.values() if keyword in ks)
        return 1.0 / n if n else 0.0


def load_taxonomy(path: str | Path | None = None) -> Taxonomy:
    if path is None:
        text = resources.files("contextk8s.data").joinpath("taxonomy.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return Taxonomy.from_mapping(json.loads(text))


@dataclass(frozen=True)
class Intent:
    raw_query: str
    resolved_query: str
    domains: tuple[tuple[str, float], ...]
    entities: tuple[str, ...] = ()
    cached: bool = False

    @property
    def abstained(self) -> bool:
        return not self.domains

    @property
    def domain_names(self) -> list[str]:
        return [d for d, _ in self.domains]

    def to_dict(self) -> dict:
        return {
            "raw_query": self.raw_query,
            "resolved_query": self.resolved_query,
            "domains": [{"domain": d, "confidence": round(c, 4)} for d, c in self.domains],
            "entities": list(self.entities),
            "cached": self.cached,
        }


def _plain_words(text: str) -> list[str]:
    # "Henderson's" should match the keyword and the entity "henderson".
    return [w[:-2] if w.endswith("'s") else w for w in words(text)]


def query_terms(text: str) -> set[str]:
    """Single words plus adjacent-word bigrams, lowercased."""
    ws = _plain_words(text)
    return set(ws) | {f"{a} {b}" for a, b in zip(ws, ws[1:])}


def extract_entities(query: str, known: Iterable[str] = ()) -> list[str]:
    lowered = set(_plain_words(query))
    return [e for e in known if e.lower() in lowered]


def resolve_coreference(query: str, last_entity: str | None, known: Iterable[str] = ()) -> str:
    """Replace pronouns with the session's last entity when the query names none."""
    if not last_entity or extract_entities(query, known):
        return query

    def swap(m: re.Match) -> str:
        w = m.group(0)
        if w.lower() not in PRONOUNS:
            return w
        possessive = w.lower() in {"their", "theirs", "its", "his", "hers"}
        return f"{last_entity}'s" if possessive else last_entity

    return re.sub(r"[A-Za-z]+", swap, query)


def classify_intent(
    query: str,
    taxonomy: Taxonomy,
    session_scope=None,
    *,
    known_entities: Iterable[str] = (),
) -> Intent:
    """Score domains by matched keywords, each weighted by 1/(domains sharing it)."""
    known = tuple(known_entities)
    last = getattr(session_scope, "last_entity", None)
    resolved = resolve_coreference(query, last, known)
    found = query_terms(resolved)
    scores: dict[str, float] = {}
    for domain, kws in taxonomy.keywords.items():
        s = sum(taxonomy.specificity(k) for k in kws & found)
        if s > 0:
            scores[domain] = s
    total = sum(scores.values())
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return Intent(
        raw_query=query,
        resolved_query=resolved,
        domains=tuple((d, s / total) for d, s in ranked),
        entities=tuple(extract_entities(resolved, known)),
    )


# ---------------------------------------------------------------------------
# Ranking and budget
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RankedResult:
    unit: ContextUnit
    score: float
    signals: Mapping[str, float]
    truncated: bool = False
    freshness: FreshnessState = FreshnessState.FRESH
    staleness: Mapping[str, object] | None = None

    @property
    def tokens(self) -> int:
        return token_count(self.unit.content)

    def to_dict(self) -> dict:
        u = self.unit
        out = {
            "unit_id": u.id,
            "version": u.version,
            "domain": u.metadata.domain,
            "path": u.metadata.path,
            "content": u.content,
            "tokens": self.tokens,
            "score": round(self.score, 4),
            "signals": {k: round(v, 4) for k, v in self.signals.items()},
            "truncated": self.truncated,
            "freshness": self.freshness.value,
            "metadata": {
                "author": u.metadata.author,
                "timestamp": to_rfc3339(u.metadata.timestamp),
                "sensitivity": u.metadata.sensitivity.value,
                "entities": list(u.metadata.entities),
                "authority": u.metadata.authority,
            },
        }
        if self.staleness is not None:
            out["staleness"] = dict(self.staleness)
        return out


def user_relevance(unit: ContextUnit, assigned: Sequence[str]) -> float:
    if assigned:
        segs = set(unit.metadata.path.lower().split("/"))
        ents = {e.lower() for e in unit.metadata.entities}
        for a in assigned:
            if a.lower() in segs or a.lower() in ents:
                return 1.0
    return USER_RELEVANCE_BASELINE


def signal_values(
    unit: ContextUnit,
    query_vector,
    *,
    now: datetime,
    max_age_seconds: float,
    assigned: Sequence[str] = (),
) -> dict[str, float]:
    age = max(0.0, (utc(now) - unit.metadata.timestamp).total_seconds())
    return {
        "semantic_relevance": max(0.0, cosine(query_vector, unit.vector)),
        "recency": math.exp(-age / max_age_seconds),
        "authority": min(1.0, max(0.0, float(unit.metadata.authority))),
        "user_relevance": user_relevance(unit, assigned),
    }


def rank(
    candidates: Iterable[ContextUnit],
    query_vector,
    spec: RoutingSpec,
    *,
    now: datetime,
    max_age: Callable[[ContextUnit], float],
    assigned: Sequence[str] = (),
) -> list[RankedResult]:
    """Score = sum of weight times signal; ties go to the more recent, then by path."""
    weights = spec.weights
    out = []
    for u in candidates:
        sig = signal_values(u, query_vector, now=now, max_age_seconds=max_age(u), assigned=assigned)
        score = sum(weights[name] * sig[name] for name in SIGNALS)
        out.append(RankedResult(u, score, sig))
    out.sort(key=lambda r: (-r.score, -r.signals["recency"], r.unit.metadata.path, -r.unit.version))
    return out


def apply_token_budget(ranked: Sequence[RankedResult], budget: int) -> list[RankedResult]:
    if budget <= 0:
        raise ValueError("token budget must be positive")
    if not ranked:
        return []
    first = ranked[0]
    if first.tokens > budget:
        cut = replace(first.unit, content=truncate_to_tokens(first.unit.content, budget))
        return [replace(first, unit=cut, truncated=True)]
    out, used = [], 0
    for r in ranked:
        if used + r.tokens > budget:
            break
        out.append(r)
        used += r.tokens
    return out


# ---------------------------------------------------------------------------
# Router
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Delivery:
    results: tuple[RankedResult, ...]
    intent: Intent
    audit_ref: int
    session_id: str
    denied: int = 0
    reason: str = ""

    @property
    def units(self) -> list[ContextUnit]:
        return [r.unit for r in self.results]

    def to_dict(self) -> dict:
        out = {
            "session_id": self.session_id,
            "intent": self.intent.to_dict(),
            "results": [r.to_dict() for r in self.results],
            "audit_ref": self.audit_ref,
            "denied": self.denied,
        }
        if self.reason:
            out["reason"] = self.reason
        return out


class Router:
    """Route queries for live sessions.

    ``classifier`` may replace rule-based classification; the safety tests
    plug in a random one to show that misrouting cannot leak.
    """

    def __init__(
        self,
        registry: Registry,
        engine: PermissionEngine,
        taxonomy: Taxonomy | None = None,
        *,
        vectorizer: HashedTfidf | None = None,
        clock=None,
        known_entities: Iterable[str] = (),
        classifier: Callable[[str, Session], Intent] | None = None,
        max_domains: int | None = None,
        min_semantic: float = 0.0,
    ):
        self.registry = registry
        self.engine = engine
        self.taxonomy = taxonomy or load_taxonomy()
        self.vectorizer = vectorizer or HashedTfidf()
        self.clock = clock or SystemClock()
        self.known_entities = tuple(known_entities)
        self.classifier = classifier
        self.max_domains = max_domains
        self.min_semantic = min_semantic
        self._cache: dict[tuple[str, str], Intent] = {}
        self._cache_lock = threading.Lock()

    @property
    def audit(self):
        return self.engine.audit

    def classify(self, query: str, session: Session | None = None) -> Intent:
        if self.classifier is not None:
            return self.classifier(query, session)
        scope = session.scope if session is not None else None
        resolved = resolve_coreference(query, getattr(scope, "last_entity", None), self.known_entities)
        key = (resolved, self.taxonomy.version)
        with self._cache_lock:
            hit = self._cache.get(key)
        if hit is not None:
            return replace(hit, raw_query=query, cached=True)
        intent = classify_intent(query, self.taxonomy, scope, known_entities=self.known_entities)
        with self._cache_lock:
            self._cache[key] = intent
        return intent

    def _routing_spec(self, session: Session) -> RoutingSpec:
        m = self.engine.manifest(session.domain)
        if m is None:
            m = self.registry.manifest(session.domain)
        return m.routing

    def _max_age(self, unit: ContextUnit) -> float:
        policy = self.registry.manifest(unit.metadata.domain).freshness.policy_for(unit.metadata.path)
        return policy.max_age.total_seconds()

    def route(self, session_id: str, query: str, *, now: datetime | None = None) -> Delivery:
        now = utc(now or self.clock.now())
        session = self.engine.session(session_id)
        self.engine._audit(EventKind.CONTEXT_REQUESTED, session, "received", query_digest=_digest(query))
        if not session.live:
            self.engine._audit(EventKind.CONTEXT_DENIED, session, "killed")
            raise SessionKilled(f"session {session_id} is killed")
        if not self.engine.available:
            ref = self.engine._audit(EventKind.CONTEXT_DENIED, session, "fail_closed")
            return Delivery((), Intent(query, query, ()), ref, session_id, reason="fail_closed")

        intent = self.classify(query, session)
        if intent.entities:
            session = self.engine.update_scope(session_id, last_entity=intent.entities[0])
        domains = intent.domain_names or [session.domain]
        if self.max_domains is not None:
            domains = domains[: self.max_domains]

        candidates: list[ContextUnit] = []
        staleness: dict[tuple[str, int], tuple[FreshnessState, dict | None]] = {}
        denied = 0
        for domain in domains:
            if not self.registry.has_domain(domain):
                continue
            for view in self.registry.views(domain, now):
                if view.state is FreshnessState.EXPIRED:
                    continue
                if not self.engine.check_access(session, READ, view.unit):
                    denied += 1
                    continue
                candidates.append(view.unit)
                meta = None
                if view.state is not FreshnessState.FRESH or view.flagged:
                    meta = {
                        "state": view.state.value,
                        "last_verified": to_rfc3339(view.record.last_verified),
                        "age_hours": round((now - view.record.last_verified).total_seconds() / 3600, 2),
                        "max_age": format_duration(view.record.governing_policy.max_age),
                        "flagged": view.flagged,
                    }
                staleness[(view.unit.id, view.unit.version)] = (view.state, meta)

        qvec = self.vectorizer.transform(intent.resolved_query)
        ranked = rank(
            candidates,
            qvec,
            self._routing_spec(session),
            now=now,
            max_age=self._max_age,
            assigned=session.scope.assigned,
        )
        if self.min_semantic > 0:
            ranked = [r for r in ranked if r.signals["semantic_relevance"] >= self.min_semantic]
        budgeted = apply_token_budget(ranked, self._routing_spec(session).token_budget)
        results = []
        for r in budgeted:
            state, meta = staleness[(r.unit.id, r.unit.version)]
            results.append(replace(r, freshness=state, staleness=meta))

        if results:
            ref = self.engine._audit(
                EventKind.CONTEXT_DELIVERED,
                session,
                "delivered",
                units=[f"{r.unit.id}@{r.unit.version}" for r in results],
                denied=denied,
                domains=domains,
            )
            reason = ""
        else:
            reason = "denied" if denied else "no_match"
            ref = self.engine._audit(EventKind.CONTEXT_DENIED, session, reason, denied=denied, domains=domains)
        return Delivery(tuple(results), intent, ref, session_id, denied, reason)


def _digest(text: str) -> str:
    return letter_digest(text.encode("utf-8"), 16)


def random_classifier(rng: np.random.Generator, domains: Sequence[str]) -> Callable[[str, Session], Intent]:
    """Adversarial classifier: picks 1-3 domains at random for any query."""

    def classify(query: str, session) -> Intent:
        k = int(rng.integers(1, min(3, len(domains)) + 1))
        picks = rng.choice(len(domains), size=k, replace=False)
        chosen = tuple((domains[int(i)], 1.0 / k) for i in picks)
        return Intent(query, query, chosen)

    return classify
