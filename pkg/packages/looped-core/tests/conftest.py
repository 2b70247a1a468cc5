"""
Shared pytest fixtures for looped-core tests.
"""

import numpy as np
import pytest

from looped_core import RandomSource, build_task, make_task


@pytest.fixture
def hand_task():
    """
    The two-example, one-feature instance worked out by hand.

    X = [[1], [2]], theta* = 1, y = (1, 2), alpha = 2: X^T X = 5, so eta = 1/L = 0.2
    and the first loop lands exactly on q^(1) = -2.
    """
    return build_task(np.array([[1.0], [2.0]]), np.array([1.0]), alpha=2.0, seed=7)


@pytest.fixture
def rng():
    return RandomSource(2024)


@pytest.fixture
def random_task(rng):
    """A Gaussian task at the default experiment width (n=32, d=4, alpha=1)."""
    return make_task(32, 4, 1.0, rng)


def pytest_configure(config):
    """Register custom markers."""
    config.addinivalue_line("markers", "unit: Unit tests for individual components")
    config.addinivalue_line("markers", "integration: Integration tests for component interaction")
    config.addinivalue_line("markers", "slow: Tests that take a long time to run")
