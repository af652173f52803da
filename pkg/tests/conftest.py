import os

# pin BLAS to one thread before numpy loads so every seeded run, and in
# particular the byte-identical refits the acceptance suite checks, is
# reproducible
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import numpy as np
import pytest

from archetypal import make_archetypal_data


@pytest.fixture(scope="session")
def small_flat():
    """Uncurved dataset with planted archetypes, shared by read-only tests."""
    x, truth = make_archetypal_data(n=300, k=3, p=8, sigma2=0.05, seed=0)
    return x, truth


@pytest.fixture(scope="session")
def small_curved():
    """Curved dataset with planted archetypes, shared by read-only tests."""
    x, truth = make_archetypal_data(
        n=300, k=3, p=8, sigma2=0.05, seed=0, curved_dim="auto"
    )
    return x, truth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
