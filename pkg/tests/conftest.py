import pytest

from spikekit import _kernels


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    """Run the test once per available kernel backend."""
    with _kernels.use_backend(request.param):
        yield request.param
