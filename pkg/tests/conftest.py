"""
Pytest configuration and shared fixtures for testing.
"""

import pytest
import numpy as np

from goe import BinSpec, DeterminantSource, EmpiricalSource, edge_order_densities
from sampling_status import sampling_status


@pytest.fixture(scope='session')
def edge_densities():
    """Edge-rescaled histograms of the four largest eigenvalues of GOE_300."""
    return edge_order_densities(300, 4, BinSpec(-12.0, 6.0, width=0.05), 20000, seed=7)


@pytest.fixture(scope='session')
def small_empirical_source():
    """Empirical source for GOE_11 (counts at n = 10)."""
    return EmpiricalSource.build(11, 20000, seed=11)


@pytest.fixture(scope='session')
def small_determinant_source():
    """Determinant source for GOE_11 (counts at n = 10)."""
    return DeterminantSource(n_matrix=11, n_samples=400, seed=13)


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    """Point bare artifact names at a temporary directory."""
    import config
    monkeypatch.setattr(config, 'SADDLE_OUTPUT_DIR', str(tmp_path))
    return tmp_path


@pytest.fixture
def kappa_grid():
    """Fine kappa grid on [0, 2]."""
    return np.linspace(0.0, 2.0, 401)


@pytest.fixture(autouse=True)
def reset_sampling_status():
    """Reset the sampling counters between tests."""
    sampling_status.reset_stats()
    yield
    sampling_status.reset_stats()


@pytest.fixture(autouse=True)
def reset_logging():
    """Reset logging configuration between tests."""
    import logging
    # Clear existing handlers
    logger = logging.getLogger()
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
    yield
    # Cleanup after test
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
