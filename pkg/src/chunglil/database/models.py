"""SQLAlchemy models for the chunglil run ledger."""

import json
from datetime import datetime
from typing import Any, Dict

from sqlalchemy import Column, DateTime, Integer, String, Text
from sqlalchemy.orm import declarative_base

Base = declarative_base()


class RunRecord(Base):
    """One executed command with everything needed to re-run it."""
    __tablename__ = 'run_records'

    run_id = Column(Integer, primary_key=True, autoincrement=True)
    command = Column(String, nullable=False)
    params = Column(Text, nullable=False)  # JSON object of command parameters
    seed = Column(String)  # decimal text, 64-bit seeds exceed SQLite INTEGER
    version = Column(String, nullable=False)
    record = Column(Text, nullable=False)  # full JSON record as emitted
    created_at = Column(DateTime, default=datetime.utcnow)

    @property
    def params_dict(self) -> Dict[str, Any]:
        return json.loads(self.params) if self.params else {}

    @property
    def record_dict(self) -> Dict[str, Any]:
        return json.loads(self.record) if self.record else {}

    def __repr__(self) -> str:
        return f"<RunRecord(id={self.run_id}, command='{self.command}', seed={self.seed})>"
