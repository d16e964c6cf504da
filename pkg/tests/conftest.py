import numpy as np
import pytest

from handwatch import kernels


@pytest.fixture(params=sorted(kernels.available()))
def backend(request):
    """Run the decorated test once per importable kernel backend."""
    with kernels.using(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
