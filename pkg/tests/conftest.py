import pytest

from ranet.bilinear import default_params, wide_params


@pytest.fixture(scope="session")
def params():
    return default_params()


@pytest.fixture(scope="session")
def wide():
    return wide_params()
