import numpy as np
import pytest

from smokeflow.refine import RefineParams, refine


@pytest.fixture(scope="session", autouse=True)
def warm_sor_kernel():
    """Trigger the numba JIT once so timed tests measure the algorithm only."""
    rng = np.random.default_rng(0)
    f = rng.uniform(0.2, 0.8, (8, 8))
    refine(f, f, np.zeros((8, 8, 2)), RefineParams(outer_iters=1, sor_iters=1))
