"""Deterministic seed-corpus generator.

``generate_seed(target, seed)`` writes::

    target/
      manifests/<domain>.yaml      five ContextDomain manifests
      data/<domain>/...            twelve context files plus .ctxmeta.json sidecars
      taxonomy.json                seven-domain keyword taxonomy
      org.json                     ten users, roles, assignments, client entities
      benchmark.json               200 labelled queries and a co-reference fixture
      scenarios/v2.json            upstream changes for the freshness scenarios

Same seed, same bytes.
"""

from __future__ import annotations

import json
import random
import re
from importlib import resources
from pathlib import Path

from ..errors import DirectoryNotEmpty
from .corpus import (
    CLIENTS,
    FILES,
    SEED_NOW,
    SOURCES,
    USERS,
    V2_DELETIONS,
    V2_QUERIES,
    V2_UPDATES,
    uid,
)

DEFAULT_SEED = 42

MIX = {"sales": 50, "delivery": 40, "hr": 30, "finance": 30, "cross": 50}

_ROUTING = """  routing:
    intentParsing: rule-based
    tokenBudget: 8000
    priority:
      - {signal: semantic_relevance, weight: 0.40}
      - {signal: recency, weight: 0.30}
      - {signal: authority, weight: 0.20}
      - {signal: user_relevance, weight: 0.10}
"""

MANIFESTS = {
    "clients": """apiVersion: context/v1
kind: ContextDomain
metadata:
  name: clients
  namespace: consulting-firm
  labels: {sensitivity: confidential, owner: account-management}
spec:
  sources:
    - name: client-records
      type: git-repo
      config: {path: data/clients}
      refresh: realtime
  access:
    roles:
      - role: account-manager
        read: ["*"]
        write: ["*"]
      - role: sales-rep
        read: ["${assigned}/*"]
        write: []
      - role: sales-manager
        read: ["*"]
        write: []
      - role: delivery-lead
        read: ["*"]
        write: []
      - role: consultant
        read: ["${assigned}/*"]
        write: []
    agentPermissions:
      read: autonomous
      write:
        default: soft-approval
        paths:
          "*/contacts.md": strong-approval
      execute:
        draft-document: autonomous
        update-crm-record: soft-approval
        send-external-email: strong-approval
        delete-client-record: excluded
    crossDomain:
      - {domain: sales, mode: brokered}
      - {domain: delivery, mode: brokered}
      - {domain: hr, mode: denied}
  freshness:
    defaults: {maxAge: 24h, staleAction: re-sync}
""" + _ROUTING,
    "sales": """apiVersion: context/v1
kind: ContextDomain
metadata:
  name: sales
  namespace: consulting-firm
  labels: {sensitivity: confidential, owner: head-of-sales}
spec:
  sources:
    - name: sales-docs
      type: file-system
      config: {path: data/sales}
      refresh: realtime
  access:
    roles:
      - role: sales-rep
        read: ["clients/${assigned}/*", "pipeline/*", "pricing/*"]
        write: ["clients/${assigned}/*", "pipeline/*"]
        operations: [draft-document, send-internal-msg, send-external-email, commit-to-pricing]
      - role: sales-manager
        read: ["*"]
        write: ["*"]
      - role: account-manager
        read: ["clients/*"]
        write: []
        operations: []
      - role: finance-manager
        read: ["pipeline/*", "pricing/*"]
        write: []
        operations: []
    agentPermissions:
      read: autonomous
      write:
        default: soft-approval
        paths:
          "*/contracts/*": strong-approval
          "pipeline/*": autonomous
      execute:
        draft-document: autonomous
        send-internal-msg: soft-approval
        send-external-email: strong-approval
        sign-contract: strong-approval
        commit-to-pricing: excluded
    crossDomain:
      - {domain: clients, mode: brokered}
      - {domain: delivery, mode: brokered}
      - {domain: finance, mode: brokered}
      - {domain: hr, mode: denied}
  freshness:
    defaults: {maxAge: 24h, staleAction: flag}
    overrides:
      - {path: "pipeline/*", maxAge: 1h, staleAction: re-sync}
      - {path: "pricing/*", maxAge: 24h, staleAction: re-sync}
""" + _ROUTING,
    "delivery": """apiVersion: context/v1
kind: ContextDomain
metadata:
  name: delivery
  namespace: consulting-firm
  labels: {sensitivity: internal, owner: head-of-delivery}
spec:
  sources:
    - name: delivery-docs
      type: file-system
      config: {path: data/delivery}
      refresh: realtime
  access:
    roles:
      - role: delivery-lead
        read: ["*"]
        write: ["*"]
      - role: consultant
        read: ["projects/${assigned}/*"]
        write: ["projects/${assigned}/*"]
      - role: sales-manager
        read: ["projects/*"]
        write: []
        operations: []
      - role: account-manager
        read: ["projects/*"]
        write: []
        operations: []
    agentPermissions:
      read: autonomous
      write:
        default: soft-approval
        paths: {}
      execute:
        draft-document: autonomous
        send-internal-msg: soft-approval
        send-external-email: strong-approval
        close-project: excluded
    crossDomain:
      - {domain: clients, mode: brokered}
      - {domain: hr, mode: denied}
  freshness:
    defaults: {maxAge: 24h, staleAction: re-sync}
""" + _ROUTING,
    "hr": """apiVersion: context/v1
kind: ContextDomain
metadata:
  name: hr
  namespace: consulting-firm
  labels: {sensitivity: restricted, owner: head-of-people}
spec:
  sources:
    - name: hr-records
      type: file-system
      config: {path: data/hr}
      refresh: realtime
  access:
    roles:
      - role: hr-manager
        read: ["*"]
        write: ["*"]
    agentPermissions:
      read: autonomous
      write:
        default: strong-approval
        paths: {}
      execute:
        draft-document: autonomous
        update-employee-record: strong-approval
        terminate-employee: excluded
    crossDomain:
      - {domain: sales, mode: denied}
      - {domain: clients, mode: denied}
      - {domain: delivery, mode: denied}
      - {domain: finance, mode: denied}
  freshness:
    defaults: {maxAge: 7d, staleAction: flag}
""" + _ROUTING,
    "finance": """apiVersion: context/v1
kind: ContextDomain
metadata:
  name: finance
  namespace: consulting-firm
  labels: {sensitivity: confidential, owner: cfo}
spec:
  sources:
    - name: finance-ledger
      type: file-system
      config: {path: data/finance}
      refresh: realtime
  access:
    roles:
      - role: finance-manager
        read: ["*"]
        write: ["*"]
      - role: finance-analyst
        read: ["invoices/*", "budget/*"]
        write: ["invoices/*"]
      - role: sales-manager
        read: ["invoices/*"]
        write: []
        operations: []
    agentPermissions:
      read: autonomous
      write:
        default: soft-approval
        paths: {}
      execute:
        draft-document: autonomous
        approve-payment: strong-approval
        issue-refund: excluded
    crossDomain:
      - {domain: sales, mode: brokered}
      - {domain: hr, mode: denied}
  freshness:
    defaults: {maxAge: 24h, staleAction: re-sync}
    overrides:
      - {path: "invoices/*", maxAge: 4h, staleAction: re-sync}
""" + _ROUTING,
}


# ---------------------------------------------------------------------------
# Benchmark
# ---------------------------------------------------------------------------

HEND_PROFILE = uid("clients", "henderson/profile.md")
NW_PROFILE = uid("clients", "northwind/profile.md")
NW_CONTACTS = uid("clients", "northwind/contacts.md")
DEAL = uid("sales", "clients/henderson/deal.md")
PIPELINE = uid("sales", "pipeline/q3-forecast.md")
RATES = uid("sales", "pricing/rate-card.md")
HEND_STATUS = uid("delivery", "projects/henderson/status.md")
MER_STATUS = uid("delivery", "projects/meridian/status.md")
SALARY = uid("hr", "compensation/salary-bands.md")
LEAVE = uid("hr", "policies/leave-policy.md")
RECEIVABLES = uid("finance", "invoices/receivables.md")
BUDGET = uid("finance", "budget/fy2026.md")

# category -> (users, [(text, relevant unit ids, domain labels)])
TEMPLATES = {
    "sales": (
        ["alice", "bob", "carol"],
        [
            ("What is the Henderson deal status?", [DEAL], ["sales"]),
            ("Where does the Henderson phase two expansion stand in negotiation?", [DEAL], ["sales"]),
            ("What contract value did we propose for the Henderson expansion?", [DEAL], ["sales"]),
            ("Show me the Q3 pipeline forecast", [PIPELINE], ["sales"]),
            ("Which opportunities are expected to close this quarter?", [PIPELINE], ["sales"]),
            ("How does the weighted pipeline compare with quota?", [PIPELINE], ["sales"]),
            ("What are our daily rates for a senior consultant?", [RATES], ["sales"]),
            ("What discount can a sales rep offer on the rate card?", [RATES], ["sales"]),
            ("Is the Meridian renewal likely to close in June?", [PIPELINE], ["sales"]),
            ("What pricing did we quote Henderson and which discount applies?", [DEAL, RATES], ["sales"]),
            ("What are the next steps to close the Henderson deal?", [DEAL], ["sales"]),
        ],
    ),
    "delivery": (
        ["dave", "erin", "frank"],
        [
            ("Is the Henderson project on track?", [HEND_STATUS], ["delivery"]),
            ("What milestones are left on the Meridian implementation?", [MER_STATUS], ["delivery"]),
            ("What are the current blockers on the Henderson rollout?", [HEND_STATUS], ["delivery"]),
            ("Who is staffed on the Meridian project?", [MER_STATUS], ["delivery"]),
            ("When is go-live for the first Meridian hospital?", [MER_STATUS], ["delivery"]),
            ("Summarize project status across all engagements", [HEND_STATUS, MER_STATUS], ["delivery"]),
            ("Is team utilization at plan on the Henderson workstream?", [HEND_STATUS], ["delivery"]),
            ("How much timeline buffer is left on the integration work?", [MER_STATUS], ["delivery"]),
        ],
    ),
    "hr": (
        ["grace"],
        [
            ("What is the salary band for a senior consultant?", [SALARY], ["hr"]),
            ("How many weeks of parental leave do employees get?", [LEAVE], ["hr"]),
            ("What is the compensation range for principals?", [SALARY], ["hr"]),
            ("Explain the vacation carry-over policy", [LEAVE], ["hr"]),
            ("What bonus target applies to the partner band?", [SALARY], ["hr"]),
            ("How many sick days can someone take without a note?", [LEAVE], ["hr"]),
            ("What is the maximum promotion increase?", [SALARY], ["hr"]),
        ],
    ),
    "finance": (
        ["heidi", "judy"],
        [
            ("Which invoices are overdue?", [RECEIVABLES], ["finance"]),
            ("What is the total outstanding receivables balance?", [RECEIVABLES], ["finance"]),
            ("What is the FY2026 travel budget?", [BUDGET], ["finance"]),
            ("How much budget goes to delivery staffing costs?", [BUDGET], ["finance"]),
            ("Has Henderson paid the March invoice?", [RECEIVABLES], ["finance"]),
            ("What spend needs finance manager approval?", [BUDGET], ["finance"]),
            ("Do we expect a write-off on any receivables?", [RECEIVABLES], ["finance"]),
        ],
    ),
    "cross": (
        ["ivan", "carol", "alice", "dave", "heidi"],
        [
            ("Give me everything on Henderson: client profile, deal and project status",
             [HEND_PROFILE, DEAL, HEND_STATUS], ["clients", "sales", "delivery"]),
            ("Who is the key contact at Henderson and what are their payment terms?",
             [HEND_PROFILE], ["clients", "finance"]),
            ("Does the outstanding Henderson invoice affect the deal negotiation?",
             [RECEIVABLES, DEAL], ["finance", "sales"]),
            ("Is the Meridian project at risk of delaying the renewal?",
             [MER_STATUS, PIPELINE], ["delivery", "sales"]),
            ("What happened with the Northwind account and is it still in the pipeline?",
             [NW_PROFILE, PIPELINE], ["clients", "sales"]),
            ("Compare our rate card with consulting costs in the budget",
             [RATES, BUDGET], ["sales", "finance"]),
            ("Which client relationships carry overdue invoices?",
             [RECEIVABLES, HEND_PROFILE, NW_PROFILE], ["finance", "clients"]),
            ("Who are the Northwind contacts and do they owe us money?",
             [NW_CONTACTS, RECEIVABLES], ["clients", "finance"]),
            ("How does the Henderson project status affect the phase two deal?",
             [HEND_STATUS, DEAL], ["delivery", "sales"]),
        ],
    ),
}

_PREFIXES = ["", "", "Quick question: ", "Can you tell me: ", "For my next meeting, "]
_SUFFIXES = ["", "", "", " Please keep it short.", " I need this today."]

COREFERENCE = [
    {"user": "carol", "turns": ["What is the Henderson deal status?", "What are their payment terms?"],
     "expected_entity": "Henderson"},
    {"user": "ivan", "turns": ["Tell me about the Northwind account", "Who are their contacts?"],
     "expected_entity": "Northwind"},
]


def build_benchmark(seed: int = DEFAULT_SEED) -> dict:
    rng = random.Random(seed)
    queries = []
    for category, count in MIX.items():
        users, templates = TEMPLATES[category]
        for i in range(count):
            text, relevant, labels = templates[i % len(templates)] if i < len(templates) else rng.choice(templates)
            prefix = rng.choice(_PREFIXES)
            body = text[0].lower() + text[1:] if prefix else text
            queries.append(
                {
                    "id": f"q{len(queries) + 1:03d}",
                    "category": category,
                    "user": rng.choice(users),
                    "text": prefix + body + rng.choice(_SUFFIXES),
                    "relevant": sorted(relevant),
                    "domains": list(labels),
                }
            )
    return {"seed": seed, "mix": MIX, "queries": queries, "coreference": COREFERENCE}


def _sidecar(domain: str) -> str:
    meta = {path: m for path, (m, _) in sorted(FILES[domain].items())}
    return json.dumps(meta, indent=2, sort_keys=True) + "\n"


def _check_digit_runs(text: str, where: str) -> None:
    if re.search(r"\d{6,}", text):
        raise AssertionError(f"{where} contains a six-digit run")


def generate_seed(target: str | Path, seed: int = DEFAULT_SEED) -> Path:
    """Write the seed corpus under ``target``, which must be empty or absent."""
    target = Path(target)
    if target.exists() and any(target.iterdir()):
        raise DirectoryNotEmpty(f"{target} is not empty")
    target.mkdir(parents=True, exist_ok=True)

    def write(rel: str, text: str) -> None:
        p = target / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)

    for domain, text in MANIFESTS.items():
        write(f"manifests/{domain}.yaml", text)
    for domain, files in FILES.items():
        base = SOURCES[domain][2]
        for path, (_, content) in sorted(files.items()):
            _check_digit_runs(content, f"{domain}/{path}")
            write(f"{base}/{path}", content)
        write(f"{base}/.ctxmeta.json", _sidecar(domain))

    taxonomy = resources.files("contextk8s.data").joinpath("taxonomy.json").read_text(encoding="utf-8")
    write("taxonomy.json", taxonomy)
    org = {"now": SEED_NOW, "users": USERS, "entities": list(CLIENTS)}
    write("org.json", json.dumps(org, indent=2) + "\n")
    write("benchmark.json", json.dumps(build_benchmark(seed), indent=2) + "\n")
    v2 = {"updates": V2_UPDATES, "deletions": V2_DELETIONS, "queries": V2_QUERIES}
    write("scenarios/v2.json", json.dumps(v2, indent=2) + "\n")
    return target


def corpus_files(root: str | Path) -> list[Path]:
    """The context files (sidecars excluded) under a generated tree."""
    root = Path(root) / "data"
    return sorted(p for p in root.rglob("*") if p.is_file() and not p.name.startswith("."))
