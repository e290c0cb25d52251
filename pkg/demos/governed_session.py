"""A sales rep's agent asks for context, is refused HR data, and needs a code to email a client.

    python demos/governed_session.py
"""

import tempfile
from pathlib import Path

from contextk8s.bench.harness import load_world
from contextk8s.bench.seed import generate_seed
from contextk8s.permissions import Channel

root = generate_seed(Path(tempfile.mkdtemp()) / "firm")
cp = load_world(root).control_plane()
s = cp.open_session("alice")
print(f"session {s.session_id} for alice ({s.role}, assigned {list(s.scope.assigned)})\n")

for query in ("What is the status of the Henderson deal?", "Show me the salary bands"):
    d = cp.route(s.session_id, query)
    print(f"> {query}")
    print(f"  domains {[name for name, _ in d.intent.domains]}, audit #{d.audit_ref}")
    for r in d.results:
        print(f"  {r.score:.3f}  {r.freshness.value:<6} {r.unit.id}")
    if not d.results:
        print("  nothing delivered")
    print()

draft = cp.engine.submit_action(s.session_id, "draft-document", {"title": "meeting notes"})
print(f"draft-document       -> {draft.status.value} ({draft.tier.value})")
email = cp.engine.submit_action(s.session_id, "send-external-email", {"to": "sam@henderson.example"})
print(f"send-external-email  -> {email.status.value} ({email.tier.value}), approval {email.approval_id}")

# The code reaches the human on a separate channel; the agent never sees it.
code = cp.engine.out_of_band.code_for(email.approval_id)
res = cp.engine.resolve_strong(email.approval_id, code, Channel.OUT_OF_BAND)
print(f"out-of-band approval -> {res.state.value}, executed={res.executed}")
print(f"\n{len(cp.audit)} audit events recorded")
