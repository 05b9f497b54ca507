"""Repository pattern for database access."""

import json
from typing import Any, Dict, List, Optional

from sqlalchemy.orm import Session

from .models import RunRecord


class RunRecordRepository:
    """Repository for stored run records."""

    def __init__(self, session: Session):
        self.session = session

    def create(self, record: Dict[str, Any]) -> RunRecord:
        """Store an emitted record (the JSON form produced by RecordFormatter)."""
        seed = record.get("seed")
        run = RunRecord(
            command=record["command"],
            params=json.dumps(record.get("params", {}), sort_keys=True),
            seed=None if seed is None else str(seed),
            version=record["version"],
            record=json.dumps(record, sort_keys=True),
        )
        self.session.add(run)
        self.session.flush()  # Get the ID without committing
        return run

    def get_by_id(self, run_id: int) -> Optional[RunRecord]:
        return self.session.query(RunRecord).filter(RunRecord.run_id == run_id).first()

    def list_recent(self, limit: int = 20, command: Optional[str] = None) -> List[RunRecord]:
        """Most recent runs first, optionally for a single command."""
        query = self.session.query(RunRecord)
        if command:
            query = query.filter(RunRecord.command == command)
        return query.order_by(RunRecord.created_at.desc(), RunRecord.run_id.desc()).limit(limit).all()
