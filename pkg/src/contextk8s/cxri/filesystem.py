"""Directory-backed connectors.

``FileSystemConnector`` maps every non-hidden file under the source root to
one ContextUnit. ``GitDirConnector`` is the same tree plus commit metadata
kept in ``.ctxmeta.json`` at the root (path -> author/timestamp/...), which
is updated on every write the way a commit would be.
"""

from __future__ import annotations

import json
import os
from datetime import datetime, timezone
from pathlib import Path

from ..errors import ConnectFailed, ConnectionLost, NotFound, WriteFailed
from ..registry import ContextUnit
from ..timeutil import from_rfc3339, to_rfc3339
from .base import Connector, HealthState, Status, Subscription, WriteResult

SIDECAR = ".ctxmeta.json"


def _truthy(value: str | None) -> bool:
    return str(value).lower() in ("1", "true", "yes")


class FileSystemConnector(Connector):
    kind = "file-system"

    def __init__(self, spec, ctx, clock=None, base_dir: str | os.PathLike | None = None):
        super().__init__(spec, ctx, clock)
        raw = spec.config.get("path")
        self.root = Path(base_dir or ".") / raw if raw else None
        self.read_only = _truthy(spec.config.get("readOnly"))

    def open(self) -> None:
        if self.root is None:
            raise ConnectFailed(f"source {self.spec.name}: config.path is required")
        if not self.root.is_dir():
            raise ConnectFailed(f"source {self.spec.name}: directory {self.root} does not exist")
        self.alive = True

    # -- metadata ----------------------------------------------------------

    def _sidecar(self) -> dict:
        p = self.root / SIDECAR
        if not p.exists():
            return {}
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return {}
        return data if isinstance(data, dict) else {}

    def _meta(self, rel: str, full: Path, sidecar: dict) -> dict:
        entry = sidecar.get(rel, {})
        if "timestamp" in entry:
            ts = from_rfc3339(entry["timestamp"])
        else:
            ts = datetime.fromtimestamp(full.stat().st_mtime, tz=timezone.utc)
        return {
            "author": entry.get("author", "unknown"),
            "timestamp": ts,
            "sensitivity": entry.get("sensitivity", "internal"),
            "authority": entry.get("authority", 0.5),
            "entities": entry.get("entities", ()),
            "unit_type": entry.get("unit_type", "unstructured"),
        }

    # -- helpers -----------------------------------------------------------

    def _check_root(self) -> None:
        if not self.root.is_dir():
            self.alive = False
            raise ConnectionLost(f"source {self.spec.name}: {self.root} is unreachable")

    def _rel_ok(self, rel: str) -> Path:
        rel = rel.strip("/")
        full = (self.root / rel).resolve()
        if self.root.resolve() not in full.parents:
            raise NotFound(f"{rel} is outside the source root")
        return full

    def list_paths(self) -> list[str]:
        self._require_alive()
        self._check_root()
        out = []
        for dirpath, dirnames, filenames in os.walk(self.root):
            dirnames[:] = sorted(d for d in dirnames if not d.startswith("."))
            for name in filenames:
                if name.startswith("."):
                    continue
                out.append(Path(dirpath, name).relative_to(self.root).as_posix())
        return sorted(out)

    def _load(self, rel: str, sidecar: dict) -> ContextUnit:
        full = self._rel_ok(rel)
        try:
            content = full.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise NotFound(f"{self.spec.name}:{rel} does not exist") from None
        except IsADirectoryError:
            raise NotFound(f"{self.spec.name}:{rel} is a directory") from None
        version = self._track(rel, content)
        return self.ctx.make_unit(rel, content, version, **self._meta(rel, full, sidecar))

    # -- operations --------------------------------------------------------

    def query(self, q: str) -> list[ContextUnit]:
        self._require_alive()
        self._check_root()
        needle = q.lower()
        sidecar = self._sidecar()
        out = []
        for rel in self.list_paths():
            unit = self._load(rel, sidecar)
            m = unit.metadata
            haystack = [unit.content, m.author, m.path, *m.entities]
            if not needle or any(needle in h.lower() for h in haystack):
                out.append(unit)
        return out

    def read(self, path: str) -> ContextUnit:
        self._require_alive()
        self._check_root()
        return self._load(path.strip("/"), self._sidecar())

    def write(self, path: str, content: str, *, author: str = "contextk8s") -> WriteResult:
        self._require_alive()
        self._check_root()
        if self.read_only:
            raise WriteFailed(f"source {self.spec.name} is read-only")
        rel = path.strip("/")
        full = self._rel_ok(rel)
        try:
            full.parent.mkdir(parents=True, exist_ok=True)
            full.write_text(content, encoding="utf-8")
        except OSError as exc:
            raise WriteFailed(f"{self.spec.name}:{rel}: {exc}") from None
        self._after_write(rel, author)
        return WriteResult(rel, self._bump(rel, content))

    def _after_write(self, rel: str, author: str) -> None:
        pass

    def _signatures(self) -> dict[str, tuple[int, int]]:
        if not self.root.is_dir():
            self.alive = False
            raise ConnectionLost(f"source {self.spec.name}: {self.root} is unreachable")
        sigs = {}
        for rel in self.list_paths():
            try:
                st = (self.root / rel).stat()
            except FileNotFoundError:
                continue
            sigs[rel] = (st.st_mtime_ns, st.st_size)
        return sigs

    def subscribe(self, path_glob: str = "*") -> Subscription:
        self._require_alive()
        return Subscription(self._signatures, path_glob, self.clock)

    def health(self) -> Status:
        def probe():
            if self.root is None:
                return HealthState.DISCONNECTED, "no path configured"
            if not self.root.is_dir():
                return HealthState.DISCONNECTED, f"{self.root} unreachable"
            if not os.access(self.root, os.R_OK):
                return HealthState.DEGRADED, f"{self.root} not readable"
            return HealthState.CONNECTED, "ok"

        return self.timed_health(probe)


class GitDirConnector(FileSystemConnector):
    kind = "git-repo"

    def open(self) -> None:
        if self.root is None:
            remote = self.spec.config.get("repo")
            detail = f"remote {remote!r} is not reachable; set config.path to a checkout" if remote else "config.path is required"
            raise ConnectFailed(f"source {self.spec.name}: {detail}")
        super().open()

    def _after_write(self, rel: str, author: str) -> None:
        sidecar = self._sidecar()
        entry = dict(sidecar.get(rel, {}))
        entry["author"] = author
        entry["timestamp"] = to_rfc3339(self.clock.now())
        sidecar[rel] = entry
        try:
            (self.root / SIDECAR).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except OSError as exc:
            raise WriteFailed(f"{self.spec.name}: metadata update failed: {exc}") from None
