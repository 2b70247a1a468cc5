"""
Pytest configuration for looped-cli tests.
"""

import logging

import pytest

from looped_cli.config import WORKERS_ENV
from looped_cli.main import _installed_handlers


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running sweep tests")


@pytest.fixture(autouse=True)
def _single_worker(monkeypatch):
    """Tests start with the default worker count unless they set their own."""
    monkeypatch.delenv(WORKERS_ENV, raising=False)


@pytest.fixture(autouse=True)
def _reset_root_logger():
    """Drop handlers main() installed so they never outlive the captured streams."""
    yield
    root = logging.getLogger()
    for handler in _installed_handlers:
        root.removeHandler(handler)
        handler.close()
    _installed_handlers.clear()
