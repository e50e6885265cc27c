"""Shared fixtures: default parameter sets and cheap integrator configs."""

import numpy as np
import pytest

from lyosim import (
    IntegratorConfig,
    default_parameters,
)


@pytest.fixture(scope="session")
def params():
    """Default parameter set, shared read-only across tests."""
    return default_parameters()


@pytest.fixture
def fast_config():
    """Looser tolerances for tests that only need qualitative behavior."""
    return IntegratorConfig(rtol=1.0e-5, atol=1.0e-8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
