from __future__ import annotations

import shutil
import warnings
from pathlib import Path

import pytest

from contextk8s.bench.harness import load_world
from contextk8s.bench.seed import generate_seed
from contextk8s.timeutil import ManualClock, from_rfc3339

FIXTURES = Path(__file__).parent / "fixtures"
SEED_NOW = from_rfc3339("2026-03-16T09:00:00Z")

warnings.filterwarnings("ignore", category=DeprecationWarning, module=r"starlette\..*")


@pytest.fixture(scope="session")
def sample_text() -> str:
    return (FIXTURES / "sample_sales.yaml").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def seed_root(tmp_path_factory) -> Path:
    """One generated corpus per run; tests that mutate it copy it first."""
    return generate_seed(tmp_path_factory.mktemp("seed") / "tree", 42)


@pytest.fixture
def world(seed_root, tmp_path):
    root = tmp_path / "seed"
    shutil.copytree(seed_root, root)
    return load_world(root)


@pytest.fixture
def clock():
    return ManualClock(SEED_NOW)


@pytest.fixture
def cp(world, clock):
    return world.control_plane(clock=clock)


# Every agent-surface response body produced by any test lands here, together
# with the control planes that may have issued codes. Teardown checks the lot.
_AGENT_BYTES: list[bytes] = []
_PLANES: list = []


@pytest.fixture(scope="session")
def agent_traffic():
    yield _AGENT_BYTES, _PLANES
    codes = {rec.otp for plane in _PLANES for rec in plane.engine.out_of_band.records()}
    blob = b"\n".join(_AGENT_BYTES)
    leaked = sorted(c for c in codes if c.encode() in blob)
    assert not leaked, f"{len(leaked)} issued codes appeared in agent-surface responses"


@pytest.fixture
def agent_client(cp, agent_traffic):
    from fastapi.testclient import TestClient

    from contextk8s.service.app import create_agent_app

    recorder, planes = agent_traffic
    planes.append(cp)
    with TestClient(create_agent_app(cp, recorder=recorder)) as client:
        yield client


ADMIN_CREDENTIAL = "test-admin-credential"


@pytest.fixture
def admin_client(cp):
    from fastapi.testclient import TestClient

    from contextk8s.service.app import create_admin_app

    with TestClient(create_admin_app(cp, ADMIN_CREDENTIAL), headers={"X-Admin-Credential": ADMIN_CREDENTIAL}) as client:
        yield client
