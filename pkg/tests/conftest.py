import numpy as np
import pytest

from palmdiff import _kernels

BACKENDS = ["python"] + (["compiled"] if _kernels.HAVE_COMPILED else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
