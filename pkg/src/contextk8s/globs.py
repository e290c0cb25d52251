"""Path globs used by access rules, freshness overrides and registry filters.

Dialect: ``*`` matches any run of characters inside one path segment (never a
``/``); ``**`` is rejected; ``${assigned}`` is the only variable and expands
to each identifier in the session's assigned scope. A pattern whose segments
match a leading prefix of the path also covers everything below that prefix,
so ``"*"`` grants the whole tree and ``"pipeline/*"`` covers
``pipeline/2026/q3.md``.
"""

from __future__ import annotations

import re
from functools import lru_cache
from typing import Iterable, Sequence

ASSIGNED = "${assigned}"
_VAR_RE = re.compile(r"\$\{([^}]*)\}")


class GlobError(ValueError):
    pass


def validate_glob(pattern: str) -> None:
    if not isinstance(pattern, str) or not pattern:
        raise GlobError("glob must be a non-empty string")
    if "**" in pattern:
        raise GlobError(f"'**' is not supported in {pattern!r}")
    if pattern.startswith("/"):
        raise GlobError(f"glob must be relative: {pattern!r}")
    for var in _VAR_RE.findall(pattern):
        if "${" + var + "}" != ASSIGNED:
            raise GlobError(f"unknown variable ${{{var}}} in {pattern!r}")
    stripped = _VAR_RE.sub("", pattern)
    if "$" in stripped or "{" in stripped or "}" in stripped:
        raise GlobError(f"malformed variable in {pattern!r}")
    if any(seg == "" for seg in pattern.split("/")):
        raise GlobError(f"empty path segment in {pattern!r}")


@lru_cache(maxsize=4096)
def _segment_regex(segment: str) -> re.Pattern:
    parts = [re.escape(p) for p in segment.split("*")]
    return re.compile("^" + "[^/]*".join(parts) + "$")


def _match_concrete(pattern: str, path: str) -> bool:
    pat_segs = pattern.split("/")
    path_segs = path.split("/")
    if len(pat_segs) > len(path_segs):
        return False
    return all(_segment_regex(p).match(s) for p, s in zip(pat_segs, path_segs))


def expand(pattern: str, assigned: Sequence[str] | None) -> list[str]:
    """Substitute ``${assigned}``; ``None`` means "any value" (wildcard)."""
    if ASSIGNED not in pattern:
        return [pattern]
    if assigned is None:
        return [pattern.replace(ASSIGNED, "*")]
    return [pattern.replace(ASSIGNED, a) for a in assigned]


def glob_match(pattern: str, path: str, assigned: Sequence[str] | None = ()) -> bool:
    """True if ``path`` is covered by ``pattern``.

    ``assigned=None`` treats ``${assigned}`` as a wildcard; an empty sequence
    makes any pattern containing it match nothing.
    """
    path = path.strip("/")
    return any(_match_concrete(p, path) for p in expand(pattern, assigned))


def any_match(patterns: Iterable[str], path: str, assigned: Sequence[str] | None = ()) -> bool:
    return any(glob_match(p, path, assigned) for p in patterns)


def first_match(patterns: Iterable[str], path: str, assigned: Sequence[str] | None = ()) -> str | None:
    for p in patterns:
        if glob_match(p, path, assigned):
            return p
    return None
