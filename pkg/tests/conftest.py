"""Shared fixtures."""

import pytest

from src.config import set_config


@pytest.fixture(autouse=True)
def fresh_config():
    """Reload configuration from the environment around every test."""
    set_config(None)
    yield
    set_config(None)
