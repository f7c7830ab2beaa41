import numpy as np
import pytest

from prudelete import _kernels

BACKENDS = ["numpy"] + (["numba"] if _kernels.HAS_NUMBA else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per kernel backend."""
    kernels = _kernels.KERNELS_NUMBA if request.param == "numba" else _kernels.KERNELS_NUMPY
    monkeypatch.setattr(_kernels, "ACTIVE", kernels)
    return kernels


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
