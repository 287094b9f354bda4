import os

import numpy as np
import pytest

from heatlab import GridSpec, SigmaSpec

# Keep BLAS thread pools quiet so worker-count comparisons are clean.
os.environ.setdefault("OMP_NUM_THREADS", "1")


@pytest.fixture(scope="session")
def tiny_grid() -> GridSpec:
    """32 steps x 65 nodes; small enough for thousands of replications."""
    return GridSpec.for_window(T=2.0 ** -4, dx=2.0 ** -4, window=(0.0, 1.0),
                               dt=2.0 ** -9)


@pytest.fixture(scope="session")
def sigma_wavy() -> SigmaSpec:
    return SigmaSpec.sinusoidal(1.0, 0.4)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20260817)
