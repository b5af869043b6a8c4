import pytest
from hypothesis import settings

from awn import models

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def toy():
    return models.toy_spec()


@pytest.fixture(scope="session")
def qspec():
    return models.qmsg_spec()
