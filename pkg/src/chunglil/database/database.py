"""Engine and session handling for the run ledger."""

import logging
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Generator, Optional

from sqlalchemy import create_engine, event
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, sessionmaker

from .models import Base, RunRecord

logger = logging.getLogger(__name__)

LEDGER_URL_ENV = 'CHUNGLIL_DATABASE_URL'
DEFAULT_LEDGER_FILE = Path(__file__).resolve().parents[3] / "data" / "chunglil.db"
SQLITE_TIMEOUT_SECONDS = 20

_engine: Optional[Engine] = None
_session_factory: Optional[sessionmaker] = None


def get_database_url() -> str:
    """Ledger URL from CHUNGLIL_DATABASE_URL, else a SQLite file under data/."""
    configured = os.getenv(LEDGER_URL_ENV)
    if configured:
        return configured
    DEFAULT_LEDGER_FILE.parent.mkdir(parents=True, exist_ok=True)
    return f"sqlite:///{DEFAULT_LEDGER_FILE}"


def _build_engine(url: str) -> Engine:
    if not url.startswith("sqlite"):
        return create_engine(url, pool_pre_ping=True)

    engine = create_engine(url, pool_pre_ping=True, connect_args={"timeout": SQLITE_TIMEOUT_SECONDS})

    @event.listens_for(engine, "connect")
    def _use_wal(dbapi_connection, connection_record):
        # readers stay unblocked while a run is being stored
        cursor = dbapi_connection.cursor()
        cursor.execute("PRAGMA journal_mode=WAL")
        cursor.close()

    return engine


def get_engine() -> Engine:
    """Process-wide engine, created on first use."""
    global _engine
    if _engine is None:
        url = get_database_url()
        logger.info(f"Opening run ledger at {url}")
        _engine = _build_engine(url)
    return _engine


def dispose_engine() -> None:
    """Drop the cached engine so the next call re-reads CHUNGLIL_DATABASE_URL."""
    global _engine, _session_factory
    if _engine is not None:
        _engine.dispose()
    _engine = None
    _session_factory = None


def get_session() -> Session:
    global _session_factory
    if _session_factory is None:
        _session_factory = sessionmaker(bind=get_engine(), autoflush=False)
    return _session_factory()


@contextmanager
def get_db_session() -> Generator[Session, None, None]:
    """Session that commits on success and rolls back on any error."""
    session = get_session()
    try:
        yield session
        session.commit()
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()


def init_database() -> None:
    """Create the run_records table if it does not exist yet."""
    Base.metadata.create_all(bind=get_engine())
    logger.debug("run ledger schema ensured")


def get_database_info() -> Dict[str, Any]:
    init_database()
    with get_db_session() as session:
        stored = session.query(RunRecord).count()
    return {"url": get_database_url(), "driver": get_engine().dialect.name, "runs": stored}
