"""The ordered approval tiers shared by manifests and the permission engine."""

from __future__ import annotations

import enum
from functools import total_ordering


@total_ordering
class Tier(enum.Enum):
    AUTONOMOUS = "autonomous"
    SOFT_APPROVAL = "soft-approval"
    STRONG_APPROVAL = "strong-approval"
    EXCLUDED = "excluded"

    @property
    def rank(self) -> int:
        return _ORDER[self]

    def __lt__(self, other):
        if not isinstance(other, Tier):
            return NotImplemented
        return self.rank < other.rank

    @classmethod
    def parse(cls, value) -> "Tier":
        if isinstance(value, Tier):
            return value
        if isinstance(value, str):
            norm = value.strip().lower().replace("_", "-")
            for tier in cls:
                if tier.value == norm:
                    return tier
        raise ValueError(f"unknown tier {value!r}; expected one of {[t.value for t in cls]}")


_ORDER = {
    Tier.AUTONOMOUS: 0,
    Tier.SOFT_APPROVAL: 1,
    Tier.STRONG_APPROVAL: 2,
    Tier.EXCLUDED: 3,
}
