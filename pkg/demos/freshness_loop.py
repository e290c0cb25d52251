"""Upstream edits and deletions, and what one reconciliation cycle does about them.

    python demos/freshness_loop.py
"""

import tempfile
from pathlib import Path

from contextk8s.bench.harness import load_world
from contextk8s.bench.seed import HEND_STATUS, generate_seed

root = generate_seed(Path(tempfile.mkdtemp()) / "firm")
cp = load_world(root).control_plane()
status = root / "data" / "delivery" / "projects" / "henderson" / "status.md"


def show(report):
    print(f"cycle {report.cycle_id}: {report.duration_ms:.1f} ms")
    for d in report.deltas:
        print(f"  {d['type']:<20} {d['target']}")
    if not report.deltas:
        print("  no deltas")


status.write_text(status.read_text() + "\nUpdate: phase two is at risk.\n", encoding="utf-8")
show(cp.reconcile())
unit = cp.registry.get_unit(HEND_STATUS)
print(f"  {HEND_STATUS} now v{unit.version}, {cp.registry.freshness_record(HEND_STATUS).state.value}\n")

status.unlink()
show(cp.reconcile())
show(cp.reconcile())
print(f"  live versions left: {len(cp.registry.live_versions(HEND_STATUS))}")
