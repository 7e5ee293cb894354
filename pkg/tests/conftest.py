import numpy as np
import pytest

from optofeedback import SystemParams


@pytest.fixture
def fig2():
    """Parameters of the reference time-evolution run (g_p = 0.3, no feedback)."""
    return SystemParams(omega_m=10.0, kappa=1.0, gamma_m=1e-5, g_o=0.05, g_p=0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
