"""
Database session management for the verification ledger.

The ledger defaults to a local sqlite file; any SQLAlchemy URL works. An
in-memory sqlite URL gets a single shared connection so every session sees
the same tables.
"""
import logging
from typing import Generator, Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker
from sqlalchemy.pool import StaticPool

from src.config import settings

logger = logging.getLogger(__name__)

Base = declarative_base()


def create_ledger_engine(url: Optional[str] = None) -> Engine:
    """
    Engine for a ledger database.

    Args:
        url: SQLAlchemy URL, defaults to settings.DATABASE_URL

    Returns:
        Engine with pooling suited to the backend
    """
    url = url or settings.DATABASE_URL
    if not url.startswith("sqlite"):
        return create_engine(url, pool_pre_ping=True, pool_size=10, max_overflow=20)
    options = {"connect_args": {"check_same_thread": False}}
    if url in ("sqlite://", "sqlite:///:memory:"):
        options["poolclass"] = StaticPool
    return create_engine(url, **options)


def create_session_factory(bind: Engine) -> sessionmaker:
    return sessionmaker(autocommit=False, autoflush=False, bind=bind)


engine = create_ledger_engine()
SessionLocal = create_session_factory(engine)


def get_db() -> Generator[Session, None, None]:
    """Request-scoped ledger session, closed after the response."""
    database_session = SessionLocal()
    try:
        yield database_session
    finally:
        database_session.close()


def init_db(bind: Optional[Engine] = None) -> None:
    """Create the run and check-record tables if they are missing."""
    from src.models import models  # noqa: F401  (registers tables on Base)
    bind = bind or engine
    Base.metadata.create_all(bind=bind)
    logger.info(f"Ledger tables ready on {bind.url.render_as_string(hide_password=True)}")
