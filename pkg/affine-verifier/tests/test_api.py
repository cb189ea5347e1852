"""
Tests for the HTTP API.
"""
import pytest
from uuid import uuid4
from fastapi.testclient import TestClient
from src.db.session import Base, create_ledger_engine, create_session_factory, get_db, init_db
from src.main import app


@pytest.fixture
def client():
    """API client bound to an in-memory ledger."""
    engine = create_ledger_engine("sqlite://")
    init_db(engine)
    TestingSessionLocal = create_session_factory(engine)

    def override_get_db():
        session = TestingSessionLocal()
        try:
            yield session
        finally:
            session.close()

    app.dependency_overrides[get_db] = override_get_db
    yield TestClient(app)
    app.dependency_overrides.clear()
    Base.metadata.drop_all(bind=engine)


def _run(client, **body):
    payload = {"example": "hyperbola", "checks": ["structure."], **body}
    return client.post("/api/v1/verifications", json=payload)


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_list_examples(client):
    response = client.get("/api/v1/examples")
    assert response.status_code == 200
    entries = {entry["name"]: entry for entry in response.json()}
    assert entries["titeica"] == {"name": "titeica", "default_n": 2, "min_n": 1, "max_n": 4}


def test_example_manifest(client):
    response = client.get("/api/v1/examples/titeica", params={"n": 3})
    assert response.status_code == 200
    body = response.json()
    assert body["n"] == 3
    assert body["cone"] == "orthant"
    assert body["harmonic"] is True


def test_example_errors(client):
    assert client.get("/api/v1/examples/catenoid").status_code == 404
    assert client.get("/api/v1/examples/quartic", params={"n": 3}).status_code == 400


def test_run_and_browse_verification(client):
    """A posted run is listed, detailed, and its report is rebuilt."""
    response = _run(client)
    assert response.status_code == 201
    body = response.json()
    assert body["passed"] is True
    assert body["report"]["meta"]["example"] == "hyperbola"
    run_id = body["run_id"]

    listed = client.get("/api/v1/verifications", params={"example": "hyperbola"}).json()
    assert [run["id"] for run in listed] == [run_id]

    detail = client.get(f"/api/v1/verifications/{run_id}").json()
    assert [check["name"] for check in detail["checks"]] == [check["name"] for check in body["report"]["checks"]]

    report = client.get(f"/api/v1/verifications/{run_id}/report").json()
    assert report == body["report"]

    assert client.delete(f"/api/v1/verifications/{run_id}").status_code == 204
    assert client.get(f"/api/v1/verifications/{run_id}").status_code == 404


def test_verification_errors(client):
    assert _run(client, example="catenoid").status_code == 404
    assert _run(client, example="hyperbola", n=2).status_code == 400
    assert _run(client, grid=3).status_code == 422
    assert client.get(f"/api/v1/verifications/{uuid4()}").status_code == 404
    assert client.delete(f"/api/v1/verifications/{uuid4()}").status_code == 404
