import numpy as np
import pytest

from mumimo_sim import kernel

KERNELS = [pytest.param(kernel.python_run_cycles, id="python")]
if kernel.compiled_run_cycles is not None:
    KERNELS.append(pytest.param(kernel.compiled_run_cycles, id="cython"))


@pytest.fixture(params=KERNELS)
def run_cycles(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
