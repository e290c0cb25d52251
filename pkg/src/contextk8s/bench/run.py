"""One entry point for every experiment, used by ``ctxctl bench run``."""

from __future__ import annotations

import time

from .correctness import EXPERIMENTS as CORRECTNESS, run_correctness
from .harness import (
    BASELINES,
    MODELS,
    private_world,
    render_attacks,
    render_baselines,
    render_freshness,
    run_all_baselines,
    run_attacks,
    run_baseline,
    run_freshness_scenarios,
)

VALIDATION = ("v1", "v2", "v3")
EXPERIMENTS = VALIDATION + CORRECTNESS + tuple(b.lower() for b in BASELINES)


def v1_passed(rows: list[dict]) -> bool:
    """Orderings only: absolute percentages depend on the corpus."""
    by = {r["baseline"]: r for r in rows}
    return (
        by["B1"]["leaks"] == 0
        and by["B0"]["leaks"] > 0
        and by["B3"]["noise_pct"] <= by["B2"]["noise_pct"] < by["B0"]["noise_pct"]
        and [by[b]["attacks_blocked"] for b in ("B0", "B1", "B2", "B3")] == ["0/5", "4/5", "4/5", "5/5"]
    )


def v3_passed(models: dict[str, dict]) -> bool:
    if [models[m]["blocked"] for m in MODELS] != ["0/5", "4/5", "5/5"]:
        return False
    missed = [r["attack"] for r in models["rbac"]["rows"] if r["outcome"] != "blocked"]
    return missed == ["pricing_email"]


def v2_passed(off: dict, on: dict) -> bool:
    return (
        off["phantom_queries"] >= 1
        and off["contradictory_queries"] >= 1
        and on["phantom_queries"] == 0
        and on["contradictory_queries"] == 0
        and on["conflicts_resolved_to_newest"]
    )


def _render_cases(report: dict) -> str:
    rows = report.get("cases") or report.get("scenarios") or []
    lines = [f"{report['experiment'].upper()}: {'PASS' if report['passed'] else 'FAIL'}"]
    for r in rows:
        name = r.get("case") or r.get("scenario")
        lines.append(f"  {'ok  ' if r['passed'] else 'FAIL'} {name}")
    skip = {"cases", "scenarios", "experiment", "passed"}
    for k, v in report.items():
        if k not in skip and not isinstance(v, (list, dict)):
            lines.append(f"  {k}: {v}")
    return "\n".join(lines)


def run_experiment(name: str, *, root=None, seed: int = 42, **options) -> tuple[dict, str]:
    """Run ``name`` and return ``(json_report, text_table)``."""
    name = name.lower()
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; expected one of {EXPERIMENTS}")
    world = private_world(root, seed)
    t0 = time.perf_counter()

    if name in CORRECTNESS:
        report = run_correctness(name, world, **options)
        return report, _render_cases(report)

    if name == "v1":
        reports = run_all_baselines(world)
        rows = [r.to_dict() for r in reports]
        report = {"experiment": "v1", "baselines": rows, "passed": v1_passed(rows)}
        table = render_baselines(reports)
    elif name == "v2":
        off = run_freshness_scenarios(False, world)
        on = run_freshness_scenarios(True, world)
        report = {"experiment": "v2", "off": off.to_dict(), "on": on.to_dict(),
                  "passed": v2_passed(off.to_dict(), on.to_dict())}
        table = render_freshness([off, on])
    elif name == "v3":
        reports = [run_attacks(m, world) for m in MODELS]
        models = {r.model: r.to_dict() for r in reports}
        report = {"experiment": "v3", "models": models, "passed": v3_passed(models)}
        table = render_attacks(reports)
    else:
        r = run_baseline(name.upper(), world)
        report = {"experiment": name, **r.to_dict()}
        table = render_baselines([r])
    report["runtime_s"] = round(time.perf_counter() - t0, 3)
    return report, table
