"""One conformance suite, three connector kinds, identical assertions."""

import os
import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import pytest

from contextk8s import cxri
from contextk8s.cxri import ChangeKind, HealthState, InMemoryStore
from contextk8s.errors import ConnectFailed, ConnectionLost, NotFound, WriteFailed
from contextk8s.manifest import SourceSpec

from .conftest import SEED_NOW

FILES = {
    "henderson/profile.md": "Henderson Logistics runs twelve depots.",
    "meridian/profile.md": "Meridian Health is a hospital network.",
    "notes.md": "General account notes.",
}
KINDS = ["file-system", "git-repo", "in-memory"]


@dataclass
class Harness:
    conn: cxri.Connection
    mutate: Callable[[str, str], None]  # change the store behind the connector's back
    remove: Callable[[str], None]
    kill: Callable[[], None]
    read_only: Callable[[], cxri.Connection]


def _fs_harness(kind, tmp_path, clock):
    root = tmp_path / "src"
    for rel, text in FILES.items():
        (root / rel).parent.mkdir(parents=True, exist_ok=True)
        (root / rel).write_text(text, encoding="utf-8")

    def spec(**extra):
        return SourceSpec("docs", kind, {"path": "src", **extra})

    def mutate(rel, text):
        p = root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
        st = p.stat()
        os.utime(p, ns=(st.st_atime_ns, st.st_mtime_ns + 1_000_000_000))

    def kill():
        shutil.move(root, tmp_path / "gone")

    conn = cxri.connect(spec(), domain="d", base_dir=tmp_path, clock=clock, default_roles={"r"})
    return Harness(
        conn,
        mutate,
        lambda rel: (root / rel).unlink(),
        kill,
        lambda: cxri.connect(spec(readOnly="true"), domain="d", base_dir=tmp_path, clock=clock, default_roles={"r"}),
    )


def _mem_harness(tmp_path, clock):
    name = f"store-{tmp_path.name}"
    store = cxri.register_store(InMemoryStore(name))
    for rel, text in FILES.items():
        store.put(rel, text, SEED_NOW, author="ivan")
    ro = cxri.register_store(InMemoryStore(name + "-ro", dict(store.rows), read_only=True))

    def spec(n):
        return SourceSpec("docs", "database", {"store": n})

    def kill():
        store.available = False

    conn = cxri.connect(spec(name), domain="d", clock=clock, default_roles={"r"})
    return Harness(
        conn,
        lambda rel, text: store.put(rel, text, clock.now()),
        store.delete,
        kill,
        lambda: cxri.connect(spec(ro.name), domain="d", clock=clock, default_roles={"r"}),
    )


@pytest.fixture(params=KINDS)
def h(request, tmp_path, clock):
    if request.param == "in-memory":
        harness = _mem_harness(tmp_path, clock)
        yield harness
        cxri.drop_store(f"store-{tmp_path.name}")
        cxri.drop_store(f"store-{tmp_path.name}-ro")
    else:
        yield _fs_harness(request.param, tmp_path, clock)


# -- connect / health --------------------------------------------------------


def test_connect_reports_connected(h):
    assert h.conn.alive
    status = cxri.health(h.conn)
    assert status.state is HealthState.CONNECTED and status.ok


def test_health_after_outage(h):
    h.kill()
    assert cxri.health(h.conn).state is HealthState.DISCONNECTED


def test_health_is_side_effect_free(h):
    before = [u.version for u in cxri.query(h.conn, "")]
    for _ in range(5):
        cxri.health(h.conn)
    assert [u.version for u in cxri.query(h.conn, "")] == before


def test_health_latency_is_small(h):
    worst = max(cxri.health(h.conn).latency_ms for _ in range(200))
    assert worst < 10.0


# -- query ---------------------------------------------------------------------


def test_query_substring(h):
    assert [u.path for u in cxri.query(h.conn, "henderson")] == ["henderson/profile.md"]
    assert [u.path for u in cxri.query(h.conn, "")] == sorted(FILES)


def test_units_carry_source_metadata(h):
    u = cxri.read(h.conn, "notes.md")
    assert u.metadata.domain == "d" and u.metadata.source == "docs" and u.metadata.path == "notes.md"
    assert u.id == "d/docs/notes.md"
    assert u.authorized_roles == frozenset({"r"})


def test_query_on_dead_connection(h):
    h.kill()
    with pytest.raises(ConnectionLost):
        cxri.query(h.conn, "")
    assert not h.conn.alive


# -- read ----------------------------------------------------------------------


def test_read_idempotent(h):
    a, b = cxri.read(h.conn, "notes.md"), cxri.read(h.conn, "notes.md")
    assert a.content == FILES["notes.md"] and a.version == b.version == 1


def test_read_sees_new_content_with_new_version(h):
    cxri.read(h.conn, "notes.md")
    h.mutate("notes.md", "Rewritten notes.")
    u = cxri.read(h.conn, "notes.md")
    assert u.content == "Rewritten notes." and u.version == 2


def test_read_deleted_is_not_found(h):
    h.remove("notes.md")
    with pytest.raises(NotFound):
        cxri.read(h.conn, "notes.md")


# -- write ---------------------------------------------------------------------


def test_read_your_write(h):
    r1 = cxri.write(h.conn, "drafts/x.md", "first")
    r2 = cxri.write(h.conn, "drafts/x.md", "second")
    assert r2.new_version > r1.new_version
    assert cxri.read(h.conn, "drafts/x.md").content == "second"


def test_write_read_only(h):
    with pytest.raises(WriteFailed):
        cxri.write(h.read_only(), "notes.md", "nope")


def test_write_on_dead_connection(h):
    h.kill()
    with pytest.raises(ConnectionLost):
        cxri.write(h.conn, "notes.md", "x")


# -- subscribe -----------------------------------------------------------------


def test_subscribe_quiet_when_unchanged(h):
    sub = cxri.subscribe(h.conn)
    assert sub.poll() == []


def test_subscribe_reports_each_kind(h):
    sub = cxri.subscribe(h.conn)
    h.mutate("notes.md", "changed")
    h.mutate("new.md", "brand new")
    h.remove("meridian/profile.md")
    got = {(e.path, e.kind) for e in sub.poll()}
    assert got == {
        ("notes.md", ChangeKind.MODIFIED),
        ("new.md", ChangeKind.CREATED),
        ("meridian/profile.md", ChangeKind.DELETED),
    }
    assert sub.poll() == []


def test_subscribe_observes_own_writes(h):
    sub = cxri.subscribe(h.conn, "drafts/*")
    cxri.write(h.conn, "drafts/y.md", "hello")
    cxri.write(h.conn, "other.md", "outside the glob")
    assert [(e.path, e.kind) for e in sub.poll()] == [("drafts/y.md", ChangeKind.CREATED)]


def test_subscription_ends_on_outage(h):
    sub = cxri.subscribe(h.conn)
    h.kill()
    with pytest.raises(ConnectionLost):
        sub.poll()
    with pytest.raises(ConnectionLost):
        sub.poll()


# -- connector-specific ------------------------------------------------------


def test_connect_missing_directory(tmp_path):
    with pytest.raises(ConnectFailed):
        cxri.connect(SourceSpec("x", "file-system", {"path": "missing"}), base_dir=tmp_path)


def test_connect_unknown_store():
    with pytest.raises(ConnectFailed):
        cxri.connect(SourceSpec("x", "database", {"store": "no-such-store"}))


def test_saas_connector_is_an_empty_stub():
    conn = cxri.connect(SourceSpec("crm", "connector", {"system": "salesforce"}))
    assert cxri.query(conn, "") == [] and cxri.health(conn).ok


def test_git_sidecar_metadata(seed_root, tmp_path, world):
    clients = next(m for m in world.manifests if m.name == "clients")
    conn = cxri.connect(clients.sources[0], manifest=clients, base_dir=seed_root)
    assert conn.connector_kind == "git-repo"
    u = cxri.read(conn, "henderson/profile.md")
    assert u.metadata.author == "ivan"
    assert u.metadata.timestamp.isoformat() == "2026-03-09T10:15:00+00:00"
    assert u.metadata.authority == 0.9
    assert u.authorized_roles >= {"account-manager", "sales-rep"}


def test_git_write_records_commit_metadata(world, clock):
    clients = next(m for m in world.manifests if m.name == "clients")
    conn = cxri.connect(clients.sources[0], manifest=clients, base_dir=world.root, clock=clock)
    conn.write("meridian/profile.md", "Meridian Health, new profile.", author="ivan")
    u = cxri.read(conn, "meridian/profile.md")
    assert u.metadata.author == "ivan" and u.metadata.timestamp == clock.now()


def test_seed_query_matches_grep(seed_root, world):
    clients = next(m for m in world.manifests if m.name == "clients")
    conn = cxri.connect(clients.sources[0], manifest=clients, base_dir=seed_root)
    grep = subprocess.run(
        ["grep", "-ril", "--exclude=.*", "henderson", "."],
        cwd=seed_root / "data" / "clients",
        capture_output=True,
        text=True,
    )
    expected = sorted(Path(p).as_posix().removeprefix("./") for p in grep.stdout.split())
    assert [u.path for u in cxri.query(conn, "Henderson")] == expected == ["henderson/profile.md"]


def test_orchestration_never_names_a_connector():
    pkg = Path(cxri.__file__).resolve().parents[1]
    offenders = []
    for py in pkg.rglob("*.py"):
        if "cxri" in py.parts:
            continue
        text = py.read_text(encoding="utf-8")
        for name in ("FileSystemConnector", "GitDirConnector", "InMemoryConnector"):
            if name in text:
                offenders.append(f"{py.name}:{name}")
    assert offenders == []
