"""
SQLAlchemy models for the verification ledger.
Stores suite runs and their check results.
"""
from sqlalchemy import (
    Column, String, Text, Boolean, Integer, Float,
    ForeignKey, CheckConstraint, Index, TIMESTAMP, TypeDecorator
)
from sqlalchemy.dialects.postgresql import UUID as PG_UUID, JSONB as PG_JSONB
from sqlalchemy.types import CHAR, TEXT
from sqlalchemy.sql import func
from sqlalchemy.orm import relationship
import uuid as uuid_lib
import json
from src.db.session import Base


# Cross-database type decorators
class GUID(TypeDecorator):
    """Platform-independent GUID type.
    Uses PostgreSQL's UUID type, otherwise uses CHAR(36), storing as stringified hex values.
    """
    impl = CHAR
    cache_ok = True

    def load_dialect_impl(self, dialect):
        if dialect.name == 'postgresql':
            return dialect.type_descriptor(PG_UUID(as_uuid=True))
        return dialect.type_descriptor(CHAR(36))

    def process_bind_param(self, value, dialect):
        if value is None:
            return value
        if isinstance(value, uuid_lib.UUID):
            return str(value)
        return str(uuid_lib.UUID(value))

    def process_result_value(self, value, dialect):
        if value is None or isinstance(value, uuid_lib.UUID):
            return value
        return uuid_lib.UUID(value)


class JSON(TypeDecorator):
    """Platform-independent JSON type.
    Uses PostgreSQL's JSONB type, otherwise uses TEXT with sorted keys.
    """
    impl = TEXT
    cache_ok = True

    def load_dialect_impl(self, dialect):
        if dialect.name == 'postgresql':
            return dialect.type_descriptor(PG_JSONB())
        return dialect.type_descriptor(TEXT())

    def process_bind_param(self, value, dialect):
        if dialect.name == 'postgresql' or value is None:
            return value
        return json.dumps(value, sort_keys=True, default=self._json_serializer)

    def process_result_value(self, value, dialect):
        if dialect.name == 'postgresql' or value is None:
            return value
        return json.loads(value)

    @staticmethod
    def _json_serializer(obj):
        """Serialize UUIDs and numpy scalars."""
        if isinstance(obj, uuid_lib.UUID):
            return str(obj)
        if hasattr(obj, "item"):
            return obj.item()
        raise TypeError(f"Object of type {type(obj)} is not JSON serializable")


class VerificationRun(Base):
    """One suite run over an example."""
    __tablename__ = "verification_runs"

    id = Column(GUID(), primary_key=True, default=uuid_lib.uuid4)
    example = Column(String(64), nullable=False)
    n = Column(Integer, nullable=False)
    mode = Column(String(16), nullable=False)
    tol_profile = Column(String(32), nullable=False)
    seed = Column(Integer, nullable=False, default=0)
    passed = Column(Boolean, nullable=False)
    pass_count = Column(Integer, nullable=False, default=0)
    fail_count = Column(Integer, nullable=False, default=0)
    expected_fail_count = Column(Integer, nullable=False, default=0)
    error_count = Column(Integer, nullable=False, default=0)
    meta = Column(JSON, default={})
    created_at = Column(TIMESTAMP(timezone=True), server_default=func.now())

    # Relationships
    checks = relationship(
        "CheckRecord",
        back_populates="run",
        cascade="all, delete-orphan",
        order_by="CheckRecord.position",
    )

    __table_args__ = (
        CheckConstraint("mode IN ('analytic', 'fd')", name="check_run_mode"),
        Index("idx_verification_runs_example", "example"),
    )


class CheckRecord(Base):
    """A single check result of a run, in report order."""
    __tablename__ = "check_records"

    id = Column(GUID(), primary_key=True, default=uuid_lib.uuid4)
    run_id = Column(GUID(), ForeignKey("verification_runs.id"), nullable=False)
    position = Column(Integer, nullable=False)
    name = Column(String(255), nullable=False)
    group = Column(String(64), nullable=False)
    verdict = Column(String(16), nullable=False)
    residual = Column(Float)
    tol = Column(Float, nullable=False)
    comparison = Column(String(4), nullable=False, default="le")
    expectation = Column(String(8), nullable=False, default="pass")
    provenance = Column(String(16), nullable=False, default="analytic")
    seconds = Column(Float, nullable=False, default=0.0)
    message = Column(Text)

    # Relationships
    run = relationship("VerificationRun", back_populates="checks")

    __table_args__ = (
        CheckConstraint(
            "verdict IN ('pass', 'fail', 'expected-fail', 'error')",
            name="check_record_verdict"
        ),
        Index("idx_check_records_run", "run_id"),
    )
