"""Run ledger for chunglil."""

from .database import (
    get_database_url, get_engine, get_session, get_db_session,
    init_database, dispose_engine, get_database_info
)
from .models import Base, RunRecord
from .repositories import RunRecordRepository

__all__ = [
    'get_database_url',
    'get_engine',
    'get_session',
    'get_db_session',
    'init_database',
    'dispose_engine',
    'get_database_info',
    'Base',
    'RunRecord',
    'RunRecordRepository',
]
