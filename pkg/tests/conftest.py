import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "hjlab", deadline=None, max_examples=40, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "hjlab"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def saddle_run():
    """Saddle scenario at the reference parameters (R, V and the cross-check)."""
    from hjlab.experiments import run_counterexample_saddle
    return run_counterexample_saddle(0.75, 1.0, 0.1, dx=2e-3, cross_check=True)


@pytest.fixture(scope="session")
def dim1_run():
    from hjlab.experiments import run_counterexample_1d
    from hjlab.hamiltonian import make_builtin
    return run_counterexample_1d(make_builtin("cubic_wave"), (0.1, 0.05, 0.025), dx=1e-3)
