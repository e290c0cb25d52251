"""Freshness state machine and the reconciliation loop."""

from .state import (
    EXPIRED_FACTOR,
    Delta,
    DeltaType,
    FreshnessRecord,
    FreshnessState,
    freshness_state,
    parse_delta_type,
    resolve_conflict,
)

__all__ = [
    "EXPIRED_FACTOR",
    "Delta",
    "DeltaType",
    "FreshnessRecord",
    "FreshnessState",
    "freshness_state",
    "parse_delta_type",
    "resolve_conflict",
    "Reconciler",
    "CycleReport",
]


def __getattr__(name):
    # reconciler imports the registry, which imports .state; load it lazily.
    if name in ("Reconciler", "CycleReport"):
        from . import reconciler

        return getattr(reconciler, name)
    raise AttributeError(name)
