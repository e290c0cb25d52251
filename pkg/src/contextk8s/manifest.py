"""Parse, validate, serialise and cross-check ContextDomain manifests.

A manifest is a YAML document of the form::

    apiVersion: context/v1
    kind: ContextDomain
    metadata: {name: sales, namespace: acme-corp, labels: {...}}
    spec: {sources: [...], access: {...}, freshness: {...}, routing: {...}}

``operator``, ``trust`` and ``reliability`` sections are kept verbatim as
opaque mappings. Parsing never normalises declared values: a routing weight
vector that does not sum to one is an error, not something to rescale.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from datetime import timedelta
from pathlib import Path
from types import MappingProxyType
from typing import Any, Iterable, Mapping

import yaml

from .errors import ManifestSyntaxError, SchemaError
from .globs import GlobError, first_match, glob_match, validate_glob
from .tiers import Tier
from .timeutil import format_duration, parse_duration

API_VERSION = "context/v1"
KIND = "ContextDomain"

SOURCE_TYPES = ("git-repo", "connector", "file-system", "database")
CHUNKING = ("semantic", "per-thread", "fixed", "none")
STALE_ACTIONS = ("re-sync", "flag", "archive")
CROSS_MODES = ("brokered", "denied")
INTENT_PARSING = ("rule-based", "llm-assisted")
SIGNALS = ("semantic_relevance", "recency", "authority", "user_relevance")
OPAQUE_SECTIONS = ("operator", "trust", "reliability")

WEIGHT_TOLERANCE = 1e-9

DEFAULT_MAX_AGE = timedelta(hours=24)
DEFAULT_STALE_ACTION = "flag"
DEFAULT_TOKEN_BUDGET = 8000
DEFAULT_WEIGHTS = (
    ("semantic_relevance", 0.40),
    ("recency", 0.30),
    ("authority", 0.20),
    ("user_relevance", 0.10),
)

_IDENT_RE = re.compile(r"^[a-z0-9]([-a-z0-9]*[a-z0-9])?$")
_OP_RE = re.compile(r"^[a-z0-9][-_a-z0-9]*$")


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IngestionSpec:
    chunking: str = "none"
    chunk_size: int | None = None
    ttl: timedelta | None = None
    embedding: str | None = None


@dataclass(frozen=True)
class SourceSpec:
    name: str
    type: str
    config: Mapping[str, str] = field(default_factory=dict)
    # None means "realtime": poll on every reconciliation cycle.
    refresh: timedelta | None = None
    ingestion: IngestionSpec | None = None

    @property
    def realtime(self) -> bool:
        return self.refresh is None


@dataclass(frozen=True)
class RoleRule:
    role: str
    read: tuple[str, ...] = ()
    write: tuple[str, ...] = ()
    # None: every execute operation the domain declares.
    operations: tuple[str, ...] | None = None


@dataclass(frozen=True)
class WritePermissions:
    default: Tier = Tier.SOFT_APPROVAL
    paths: tuple[tuple[str, Tier], ...] = ()


@dataclass(frozen=True)
class AgentPermissions:
    read: Tier = Tier.AUTONOMOUS
    write: WritePermissions = field(default_factory=WritePermissions)
    execute: tuple[tuple[str, Tier], ...] = ()

    def execute_tier(self, operation: str) -> Tier | None:
        for op, tier in self.execute:
            if op == operation:
                return tier
        return None

    def write_tier(self, path: str) -> Tier:
        hit = first_match([p for p, _ in self.write.paths], path, assigned=None)
        if hit is None:
            return self.write.default
        return dict(self.write.paths)[hit]


@dataclass(frozen=True)
class CrossDomainRule:
    domain: str
    mode: str


@dataclass(frozen=True)
class AccessSpec:
    roles: tuple[RoleRule, ...] = ()
    agent_permissions: AgentPermissions = field(default_factory=AgentPermissions)
    cross_domain: tuple[CrossDomainRule, ...] = ()

    def role(self, name: str) -> RoleRule | None:
        for rule in self.roles:
            if rule.role == name:
                return rule
        return None

    def cross_mode(self, domain: str) -> str | None:
        for rule in self.cross_domain:
            if rule.domain == domain:
                return rule.mode
        return None

    @property
    def brokered(self) -> tuple[str, ...]:
        return tuple(r.domain for r in self.cross_domain if r.mode == "brokered")

    def readers_of(self, path: str) -> frozenset[str]:
        """Roles whose read globs could cover ``path`` for some assignment."""
        return frozenset(
            r.role for r in self.roles if any(glob_match(g, path, assigned=None) for g in r.read)
        )


@dataclass(frozen=True)
class FreshnessPolicy:
    max_age: timedelta
    stale_action: str


@dataclass(frozen=True)
class FreshnessOverride:
    path: str
    policy: FreshnessPolicy


@dataclass(frozen=True)
class FreshnessPolicySpec:
    defaults: FreshnessPolicy = field(
        default_factory=lambda: FreshnessPolicy(DEFAULT_MAX_AGE, DEFAULT_STALE_ACTION)
    )
    overrides: tuple[FreshnessOverride, ...] = ()

    def policy_for(self, path: str) -> FreshnessPolicy:
        """First matching override in declaration order, else the defaults."""
        for ov in self.overrides:
            if first_match([ov.path], path, assigned=None):
                return ov.policy
        return self.defaults


@dataclass(frozen=True)
class RoutingSpec:
    intent_parsing: str = "rule-based"
    token_budget: int = DEFAULT_TOKEN_BUDGET
    priority: tuple[tuple[str, float], ...] = DEFAULT_WEIGHTS

    @property
    def weights(self) -> dict[str, float]:
        return dict(self.priority)


@dataclass(frozen=True)
class DomainManifest:
    name: str
    namespace: str = "default"
    labels: Mapping[str, str] = field(default_factory=dict)
    sources: tuple[SourceSpec, ...] = ()
    access: AccessSpec = field(default_factory=AccessSpec)
    freshness: FreshnessPolicySpec = field(default_factory=FreshnessPolicySpec)
    routing: RoutingSpec = field(default_factory=RoutingSpec)
    opaque: Mapping[str, Any] = field(default_factory=dict)
    api_version: str = API_VERSION
    kind: str = KIND

    def source(self, name: str) -> SourceSpec | None:
        for s in self.sources:
            if s.name == name:
                return s
        return None


@dataclass(frozen=True)
class Violation:
    message: str

    def __str__(self) -> str:
        return self.message


# ---------------------------------------------------------------------------
# YAML loading
# ---------------------------------------------------------------------------


class _StrictLoader(yaml.SafeLoader):
    """SafeLoader that rejects duplicate mapping keys."""


def _construct_mapping(loader, node, deep=False):
    seen = set()
    for key_node, _ in node.value:
        key = loader.construct_object(key_node, deep=True)
        try:
            hashable = key in seen
        except TypeError:
            raise yaml.constructor.ConstructorError(
                None, None, "unhashable mapping key", key_node.start_mark
            )
        if hashable:
            raise _DuplicateKey(key, key_node.start_mark.line + 1)
        seen.add(key)
    return yaml.SafeLoader.construct_mapping(loader, node, deep=deep)


class _DuplicateKey(Exception):
    def __init__(self, key, line):
        super().__init__(f"duplicate key {key!r} at line {line}")
        self.key = key
        self.line = line


_StrictLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _load_documents(text) -> list[Any]:
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ManifestSyntaxError(f"manifest is not valid UTF-8: {exc}") from None
    if not isinstance(text, str):
        raise ManifestSyntaxError(f"manifest must be text, got {type(text).__name__}")
    try:
        docs = list(yaml.load_all(text, Loader=_StrictLoader))
    except _DuplicateKey as exc:
        raise SchemaError(f"line {exc.line}", f"duplicate key {exc.key!r}") from None
    except (yaml.YAMLError, ValueError, TypeError, RecursionError) as exc:
        raise ManifestSyntaxError(f"malformed YAML: {exc}") from None
    return [d for d in docs if d is not None]


# ---------------------------------------------------------------------------
# Validation helpers
# ---------------------------------------------------------------------------


def _mapping(value, path: str, *, required=True) -> dict:
    if value is None and not required:
        return {}
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected a mapping, got {type(value).__name__}")
    for k in value:
        if not isinstance(k, str):
            raise SchemaError(path, f"keys must be strings, got {k!r}")
    return value


def _list(value, path: str) -> list:
    if value is None:
        return []
    if not isinstance(value, list):
        raise SchemaError(path, f"expected a list, got {type(value).__name__}")
    return value


def _keys(obj: dict, path: str, allowed: Iterable[str], required: Iterable[str] = ()) -> None:
    allowed = set(allowed)
    for k in obj:
        if k not in allowed:
            raise SchemaError(f"{path}.{k}" if path else k, "unknown field")
    for k in required:
        if k not in obj:
            raise SchemaError(f"{path}.{k}" if path else k, "missing required field")


def _str(value, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(path, f"expected a non-empty string, got {value!r}")
    return value


def _ident(value, path: str) -> str:
    s = _str(value, path)
    if not _IDENT_RE.match(s):
        raise SchemaError(path, f"invalid identifier {s!r}")
    return s


def _enum(value, path: str, choices: tuple[str, ...]) -> str:
    if value not in choices:
        raise SchemaError(path, f"invalid value {value!r}; expected one of {list(choices)}")
    return value


def _tier(value, path: str) -> Tier:
    try:
        return Tier.parse(value)
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None


def _duration(value, path: str) -> timedelta:
    try:
        return parse_duration(value)
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from None


def _glob(value, path: str) -> str:
    s = _str(value, path)
    try:
        validate_glob(s)
    except GlobError as exc:
        raise SchemaError(path, str(exc)) from None
    return s


def _scalar_map(value, path: str) -> dict[str, str]:
    m = _mapping(value, path, required=False)
    out = {}
    for k, v in m.items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        if not isinstance(v, (str, int, float)):
            raise SchemaError(f"{path}.{k}", f"expected a scalar, got {type(v).__name__}")
        out[k] = str(v)
    return out


def _int(value, path: str, *, positive=True) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {value!r}")
    if positive and value <= 0:
        raise SchemaError(path, f"must be > 0, got {value}")
    return value


def _fraction(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {value!r}")
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise SchemaError(path, f"must lie in [0, 1], got {value}")
    return value


def _plain(value, path: str):
    """Deep-copy an opaque section, insisting on JSON-like content."""
    if isinstance(value, dict):
        return {str(k): _plain(v, f"{path}.{k}") for k, v in value.items()}
    if isinstance(value, list):
        return [_plain(v, f"{path}[{i}]") for i, v in enumerate(value)]
    if value is None or isinstance(value, (str, int, float, bool)):
        return value
    return str(value)


# ---------------------------------------------------------------------------
# Section parsers
# ---------------------------------------------------------------------------


def _parse_ingestion(raw, path) -> IngestionSpec:
    m = _mapping(raw, path)
    _keys(m, path, ("chunking", "chunkSize", "ttl", "embedding"))
    return IngestionSpec(
        chunking=_enum(m.get("chunking", "none"), f"{path}.chunking", CHUNKING),
        chunk_size=_int(m["chunkSize"], f"{path}.chunkSize") if "chunkSize" in m else None,
        ttl=_duration(m["ttl"], f"{path}.ttl") if "ttl" in m else None,
        embedding=_str(m["embedding"], f"{path}.embedding") if "embedding" in m else None,
    )


def _parse_sources(raw, path) -> tuple[SourceSpec, ...]:
    out = []
    names = set()
    for i, item in enumerate(_list(raw, path)):
        p = f"{path}[{i}]"
        m = _mapping(item, p)
        _keys(m, p, ("name", "type", "config", "refresh", "ingestion"), ("name", "type"))
        name = _ident(m["name"], f"{p}.name")
        if name in names:
            raise SchemaError(f"{p}.name", f"duplicate source name {name!r}")
        names.add(name)
        refresh_raw = m.get("refresh", "realtime")
        refresh = None if refresh_raw == "realtime" else _duration(refresh_raw, f"{p}.refresh")
        out.append(
            SourceSpec(
                name=name,
                type=_enum(m["type"], f"{p}.type", SOURCE_TYPES),
                config=MappingProxyType(_scalar_map(m.get("config"), f"{p}.config")),
                refresh=refresh,
                ingestion=_parse_ingestion(m["ingestion"], f"{p}.ingestion") if "ingestion" in m else None,
            )
        )
    return tuple(out)


def _parse_access(raw, path) -> AccessSpec:
    m = _mapping(raw, path, required=False)
    _keys(m, path, ("roles", "agentPermissions", "crossDomain"))
    roles = []
    seen_roles = set()
    for i, item in enumerate(_list(m.get("roles"), f"{path}.roles")):
        p = f"{path}.roles[{i}]"
        r = _mapping(item, p)
        _keys(r, p, ("role", "read", "write", "operations"), ("role",))
        name = _ident(r["role"], f"{p}.role")
        if name in seen_roles:
            raise SchemaError(f"{p}.role", f"duplicate role {name!r}")
        seen_roles.add(name)
        ops = None
        if "operations" in r:
            ops = tuple(_op(o, f"{p}.operations[{j}]") for j, o in enumerate(_list(r["operations"], f"{p}.operations")))
        roles.append(
            RoleRule(
                role=name,
                read=tuple(_glob(g, f"{p}.read[{j}]") for j, g in enumerate(_list(r.get("read"), f"{p}.read"))),
                write=tuple(_glob(g, f"{p}.write[{j}]") for j, g in enumerate(_list(r.get("write"), f"{p}.write"))),
                operations=ops,
            )
        )

    ap = _mapping(m.get("agentPermissions"), f"{path}.agentPermissions", required=False)
    app = f"{path}.agentPermissions"
    _keys(ap, app, ("read", "write", "execute"))
    read_tier = _tier(ap.get("read", "autonomous"), f"{app}.read")
    write_raw = ap.get("write", {})
    if isinstance(write_raw, str):
        write = WritePermissions(default=_tier(write_raw, f"{app}.write"))
    else:
        w = _mapping(write_raw, f"{app}.write", required=False)
        _keys(w, f"{app}.write", ("default", "paths"))
        paths_raw = _mapping(w.get("paths"), f"{app}.write.paths", required=False)
        paths = tuple(
            (_glob(g, f"{app}.write.paths[{g!r}]"), _tier(t, f"{app}.write.paths[{g!r}]"))
            for g, t in paths_raw.items()
        )
        write = WritePermissions(default=_tier(w.get("default", "soft-approval"), f"{app}.write.default"), paths=paths)
    ex = _mapping(ap.get("execute"), f"{app}.execute", required=False)
    execute = tuple((_op(op, f"{app}.execute.{op}"), _tier(t, f"{app}.execute.{op}")) for op, t in ex.items())

    cross = []
    seen_cross = set()
    for i, item in enumerate(_list(m.get("crossDomain"), f"{path}.crossDomain")):
        p = f"{path}.crossDomain[{i}]"
        c = _mapping(item, p)
        _keys(c, p, ("domain", "mode"), ("domain", "mode"))
        dom = _ident(c["domain"], f"{p}.domain")
        if dom in seen_cross:
            raise SchemaError(f"{p}.domain", f"duplicate crossDomain entry {dom!r}")
        seen_cross.add(dom)
        cross.append(CrossDomainRule(dom, _enum(c["mode"], f"{p}.mode", CROSS_MODES)))
    return AccessSpec(
        roles=tuple(roles),
        agent_permissions=AgentPermissions(read=read_tier, write=write, execute=execute),
        cross_domain=tuple(cross),
    )


def _op(value, path) -> str:
    s = _str(value, path)
    if not _OP_RE.match(s):
        raise SchemaError(path, f"invalid operation name {s!r}")
    return s


def _parse_policy(raw, path, *, with_path=False):
    m = _mapping(raw, path)
    allowed = ("maxAge", "staleAction") + (("path",) if with_path else ())
    _keys(m, path, allowed, allowed)
    policy = FreshnessPolicy(
        max_age=_duration(m["maxAge"], f"{path}.maxAge"),
        stale_action=_enum(m["staleAction"], f"{path}.staleAction", STALE_ACTIONS),
    )
    if with_path:
        return FreshnessOverride(_glob(m["path"], f"{path}.path"), policy)
    return policy


def _parse_freshness(raw, path) -> FreshnessPolicySpec:
    m = _mapping(raw, path, required=False)
    _keys(m, path, ("defaults", "overrides"))
    defaults = (
        _parse_policy(m["defaults"], f"{path}.defaults")
        if "defaults" in m
        else FreshnessPolicy(DEFAULT_MAX_AGE, DEFAULT_STALE_ACTION)
    )
    overrides = tuple(
        _parse_policy(o, f"{path}.overrides[{i}]", with_path=True)
        for i, o in enumerate(_list(m.get("overrides"), f"{path}.overrides"))
    )
    return FreshnessPolicySpec(defaults=defaults, overrides=overrides)


def _parse_routing(raw, path) -> RoutingSpec:
    m = _mapping(raw, path, required=False)
    _keys(m, path, ("intentParsing", "tokenBudget", "priority"))
    if "priority" in m:
        priority = []
        seen = set()
        for i, item in enumerate(_list(m["priority"], f"{path}.priority")):
            p = f"{path}.priority[{i}]"
            e = _mapping(item, p)
            _keys(e, p, ("signal", "weight"), ("signal", "weight"))
            sig = _enum(e["signal"], f"{p}.signal", SIGNALS)
            if sig in seen:
                raise SchemaError(f"{p}.signal", f"signal {sig!r} listed twice")
            seen.add(sig)
            priority.append((sig, _fraction(e["weight"], f"{p}.weight")))
        missing = [s for s in SIGNALS if s not in seen]
        if missing:
            raise SchemaError(f"{path}.priority", f"missing signals {missing}")
        total = sum(w for _, w in priority)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise SchemaError(f"{path}.priority", f"weights sum to {total:.2f}")
        priority = tuple(priority)
    else:
        priority = DEFAULT_WEIGHTS
    return RoutingSpec(
        intent_parsing=_enum(m.get("intentParsing", "rule-based"), f"{path}.intentParsing", INTENT_PARSING),
        token_budget=_int(m.get("tokenBudget", DEFAULT_TOKEN_BUDGET), f"{path}.tokenBudget"),
        priority=priority,
    )


def manifest_from_dict(doc) -> DomainManifest:
    root = _mapping(doc, "<document>")
    _keys(root, "", ("apiVersion", "kind", "metadata", "spec"), ("apiVersion", "kind", "metadata", "spec"))
    if root["apiVersion"] != API_VERSION:
        raise SchemaError("apiVersion", f"must be {API_VERSION!r}, got {root['apiVersion']!r}")
    if root["kind"] != KIND:
        raise SchemaError("kind", f"must be {KIND!r}, got {root['kind']!r}")
    meta = _mapping(root["metadata"], "metadata")
    _keys(meta, "metadata", ("name", "namespace", "labels"), ("name",))
    spec = _mapping(root["spec"], "spec")
    _keys(spec, "spec", ("sources", "access", "freshness", "routing") + OPAQUE_SECTIONS)
    opaque = {k: _plain(spec[k], f"spec.{k}") for k in OPAQUE_SECTIONS if k in spec}
    return DomainManifest(
        name=_ident(meta["name"], "metadata.name"),
        namespace=_ident(meta.get("namespace", "default"), "metadata.namespace"),
        labels=MappingProxyType(_scalar_map(meta.get("labels"), "metadata.labels")),
        sources=_parse_sources(spec.get("sources"), "spec.sources"),
        access=_parse_access(spec.get("access"), "spec.access"),
        freshness=_parse_freshness(spec.get("freshness"), "spec.freshness"),
        routing=_parse_routing(spec.get("routing"), "spec.routing"),
        opaque=MappingProxyType(opaque),
    )


def parse_manifests(text) -> list[DomainManifest]:
    """Parse every document of a (possibly multi-document) YAML stream."""
    return [manifest_from_dict(doc) for doc in _load_documents(text)]


def parse_manifest(text) -> DomainManifest:
    docs = _load_documents(text)
    if len(docs) != 1:
        raise SchemaError("<stream>", f"expected exactly one document, found {len(docs)}")
    return manifest_from_dict(docs[0])


def load_manifests(path: str | Path) -> list[DomainManifest]:
    path = Path(path)
    if path.is_dir():
        out = []
        for p in sorted(path.glob("*.yaml")):
            out.extend(parse_manifests(p.read_bytes()))
        return out
    return parse_manifests(path.read_bytes())


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------


def _policy_dict(p: FreshnessPolicy) -> dict:
    return {"maxAge": format_duration(p.max_age), "staleAction": p.stale_action}


def manifest_to_dict(m: DomainManifest) -> dict:
    sources = []
    for s in m.sources:
        d: dict[str, Any] = {"name": s.name, "type": s.type}
        if s.config:
            d["config"] = dict(s.config)
        d["refresh"] = "realtime" if s.refresh is None else format_duration(s.refresh)
        if s.ingestion is not None:
            ing: dict[str, Any] = {"chunking": s.ingestion.chunking}
            if s.ingestion.chunk_size is not None:
                ing["chunkSize"] = s.ingestion.chunk_size
            if s.ingestion.ttl is not None:
                ing["ttl"] = format_duration(s.ingestion.ttl)
            if s.ingestion.embedding is not None:
                ing["embedding"] = s.ingestion.embedding
            d["ingestion"] = ing
        sources.append(d)
    roles = []
    for r in m.access.roles:
        rd: dict[str, Any] = {"role": r.role, "read": list(r.read), "write": list(r.write)}
        if r.operations is not None:
            rd["operations"] = list(r.operations)
        roles.append(rd)
    ap = m.access.agent_permissions
    spec: dict[str, Any] = {
        "sources": sources,
        "access": {
            "roles": roles,
            "agentPermissions": {
                "read": ap.read.value,
                "write": {
                    "default": ap.write.default.value,
                    "paths": {g: t.value for g, t in ap.write.paths},
                },
                "execute": {op: t.value for op, t in ap.execute},
            },
            "crossDomain": [{"domain": c.domain, "mode": c.mode} for c in m.access.cross_domain],
        },
        "freshness": {
            "defaults": _policy_dict(m.freshness.defaults),
            "overrides": [{"path": o.path, **_policy_dict(o.policy)} for o in m.freshness.overrides],
        },
        "routing": {
            "intentParsing": m.routing.intent_parsing,
            "tokenBudget": m.routing.token_budget,
            "priority": [{"signal": s, "weight": w} for s, w in m.routing.priority],
        },
    }
    for k, v in m.opaque.items():
        spec[k] = copy.deepcopy(v)
    return {
        "apiVersion": m.api_version,
        "kind": m.kind,
        "metadata": {"name": m.name, "namespace": m.namespace, "labels": dict(m.labels)},
        "spec": spec,
    }


def serialize(m: DomainManifest) -> str:
    return yaml.safe_dump(manifest_to_dict(m), sort_keys=False)


def serialize_all(manifests: Iterable[DomainManifest]) -> str:
    return yaml.safe_dump_all([manifest_to_dict(m) for m in manifests], sort_keys=False)


# ---------------------------------------------------------------------------
# Cross-manifest checks
# ---------------------------------------------------------------------------


def validate_cross_references(manifests: Iterable[DomainManifest]) -> list[Violation]:
    manifests = list(manifests)
    violations = []
    seen: set[tuple[str, str]] = set()
    for m in manifests:
        key = (m.namespace, m.name)
        if key in seen:
            violations.append(Violation(f"duplicate domain name {m.name}"))
        seen.add(key)
    names = {m.name for m in manifests}
    for m in manifests:
        for rule in m.access.cross_domain:
            if rule.domain not in names:
                violations.append(Violation(f"{m.name}: crossDomain target {rule.domain} not found"))
    return violations
