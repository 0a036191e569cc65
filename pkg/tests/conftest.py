import pytest
from hypothesis import settings

from genshift.shift import default_kernel

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def spec():
    return default_kernel()
