"""
Tests for the verification run ledger.
"""
import pytest
from uuid import uuid4
from src.db.session import Base, create_ledger_engine, create_session_factory, init_db
from src.models import models
from src.schemas.schemas import CheckResult, Report, ReportMeta
from src.services.run_ledger import RunLedgerService


# Test database setup
TEST_DATABASE_URL = "sqlite:///:memory:"


@pytest.fixture
def db_session():
    """Create a test database session."""
    engine = create_ledger_engine(TEST_DATABASE_URL)
    init_db(engine)
    TestingSessionLocal = create_session_factory(engine)
    session = TestingSessionLocal()
    yield session
    session.close()
    Base.metadata.drop_all(bind=engine)


def _report(example="titeica", verdicts=("pass", "expected-fail")):
    meta = ReportMeta(
        schema_version="1.0",
        example=example,
        n=2,
        mode="analytic",
        grid=21,
        step=1e-3,
        tol_profile="analytic",
        seed=7,
        s_max=10.0,
        rays=8,
        params={},
        checks_filter=["sigma."],
    )
    checks = [
        CheckResult(name="sigma.quadric", group="sigma", verdict=verdicts[0], residual=3.5e-15, tol=1e-10),
        CheckResult(
            name="sigma.scramble_control",
            group="scramble",
            verdict=verdicts[1],
            residual=0.42,
            tol=1e-2,
            comparison="ge",
            expectation="fail",
            message="control",
        ),
    ]
    return Report(meta=meta, checks=checks)


def test_record_report(db_session):
    """Test that a report is stored with its tallies and check records."""
    run = RunLedgerService.record_report(db_session, _report())

    assert run.id is not None
    assert run.example == "titeica"
    assert run.passed is True
    assert run.pass_count == 1
    assert run.expected_fail_count == 1
    assert run.fail_count == 0
    assert [record.position for record in run.checks] == [0, 1]
    assert run.meta["seed"] == 7


def test_report_round_trip(db_session):
    """Test that a recorded run rebuilds the report it came from."""
    report = _report()
    run = RunLedgerService.record_report(db_session, report)

    rebuilt = RunLedgerService.report_from_run(RunLedgerService.get_run(db_session, run.id))

    assert rebuilt == report


def test_list_runs_filters(db_session):
    """Test filtering runs by example and verdict."""
    RunLedgerService.record_report(db_session, _report())
    RunLedgerService.record_report(db_session, _report(verdicts=("fail", "expected-fail")))
    RunLedgerService.record_report(db_session, _report(example="hyperbola"))

    assert len(RunLedgerService.list_runs(db_session)) == 3
    assert len(RunLedgerService.list_runs(db_session, example="titeica")) == 2
    failing = RunLedgerService.list_runs(db_session, passed=False)
    assert len(failing) == 1
    assert failing[0].fail_count == 1
    assert len(RunLedgerService.list_runs(db_session, skip=1, limit=1)) == 1


def test_delete_run(db_session):
    """Test deleting a run removes it and its check records."""
    run = RunLedgerService.record_report(db_session, _report())

    assert RunLedgerService.delete_run(db_session, run.id) is True
    assert RunLedgerService.get_run(db_session, run.id) is None
    assert db_session.query(models.CheckRecord).count() == 0
    assert RunLedgerService.delete_run(db_session, uuid4()) is False


def test_memory_engine_shares_one_connection():
    """Test that in-memory ledgers keep one connection so tables persist across sessions."""
    engine = create_ledger_engine("sqlite://")
    init_db(engine)
    first = create_session_factory(engine)()
    RunLedgerService.record_report(first, _report())
    first.close()

    second = create_session_factory(engine)()
    assert len(RunLedgerService.list_runs(second)) == 1
    second.close()
