"""Per-unit freshness state machine, reconciliation deltas and conflict resolution."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Sequence

from ..manifest import FreshnessPolicy
from ..timeutil import utc

# A unit is expired once its age exceeds this multiple of maxAge.
EXPIRED_FACTOR = 2


class FreshnessState(str, enum.Enum):
    FRESH = "fresh"
    STALE = "stale"
    EXPIRED = "expired"
    CONFLICTED = "conflicted"


_SEVERITY = {FreshnessState.FRESH: 0, FreshnessState.STALE: 1, FreshnessState.EXPIRED: 2}


@dataclass(frozen=True)
class FreshnessRecord:
    unit_id: str
    state: FreshnessState
    last_verified: datetime
    governing_policy: FreshnessPolicy
    live_versions: int = 1
    # Set when the backing source went dark; cleared by a successful re-sync.
    forced_stale: bool = False


def freshness_state(record: FreshnessRecord, now: datetime) -> FreshnessState:
    """Classify a record at ``now``.

    fresh while age <= maxAge, stale up to EXPIRED_FACTOR * maxAge, expired
    beyond. Two live versions override everything with ``conflicted``.
    """
    if record.live_versions >= 2:
        return FreshnessState.CONFLICTED
    age = utc(now) - utc(record.last_verified)
    if age < timedelta(0):
        age = timedelta(0)
    max_age = record.governing_policy.max_age
    if age <= max_age:
        state = FreshnessState.FRESH
    elif age <= EXPIRED_FACTOR * max_age:
        state = FreshnessState.STALE
    else:
        state = FreshnessState.EXPIRED
    if record.forced_stale and _SEVERITY[state] < _SEVERITY[FreshnessState.STALE]:
        state = FreshnessState.STALE
    return state


class DeltaType(str, enum.Enum):
    SOURCE_DISCONNECTED = "source_disconnected"
    CONTEXT_STALE = "context_stale"
    PERMISSION_CHANGE = "permission_change"
    # Recognised but not handled here; reported as not implemented.
    OPERATOR_UNHEALTHY = "operator_unhealthy"
    ANOMALY = "anomaly"
    RELIABILITY_DRIFT = "reliability_drift"

    @property
    def implemented(self) -> bool:
        return self in (DeltaType.SOURCE_DISCONNECTED, DeltaType.CONTEXT_STALE, DeltaType.PERMISSION_CHANGE)


def parse_delta_type(value: str) -> DeltaType:
    try:
        return DeltaType(value)
    except ValueError:
        raise ValueError(f"unknown delta type {value!r}") from None


@dataclass(frozen=True)
class Delta:
    type: DeltaType
    target: str
    detected_at: datetime
    detail: dict = field(default_factory=dict, compare=False)


def resolve_conflict(unit_versions: Sequence):
    """Pick the surviving version among live ContextUnits.

    Latest metadata timestamp wins; equal timestamps keep the higher version.
    """
    if not unit_versions:
        raise ValueError("resolve_conflict needs at least one version")
    return max(unit_versions, key=lambda u: (utc(u.metadata.timestamp), u.version))
