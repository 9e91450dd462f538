import sys
from pathlib import Path

import pytest

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from ring_dynamics.kernel_dynamics import get_kernel_cache
from ring_dynamics.lattice_bath import LatticeParams, feedback_rates


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: ring sizes used for the published figures (N ~ 500)")


def ring(N: int, alpha: float, **kwargs) -> LatticeParams:
    """J = rho = 1 at the pi/2 crossing unless overridden"""
    return LatticeParams(N=N, alpha=alpha, **kwargs)


@pytest.fixture
def small_ring():
    return ring(102, 0.25)


@pytest.fixture
def blockade_ring():
    return ring(502, 0.01)


@pytest.fixture
def blockade_rates(blockade_ring):
    return feedback_rates(blockade_ring)


@pytest.fixture(autouse=True)
def fresh_kernel_cache():
    get_kernel_cache().clear()
    yield
    get_kernel_cache().clear()
