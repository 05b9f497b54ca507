"""Shared pytest configuration for chunglil tests."""

import os

import pytest

from src.chunglil.database import dispose_engine


def pytest_collection_modifyitems(config, items):
    if os.getenv("CHUNGLIL_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="full-scale run; set CHUNGLIL_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def ledger_url(tmp_path, monkeypatch):
    """Point the run ledger at a throwaway SQLite file."""
    url = f"sqlite:///{tmp_path / 'runs.db'}"
    monkeypatch.setenv("CHUNGLIL_DATABASE_URL", url)
    dispose_engine()
    yield url
    dispose_engine()
