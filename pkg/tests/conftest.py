import warnings

import pytest


@pytest.fixture(autouse=True)
def _quiet_separation_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*separation.*")
        warnings.filterwarnings("ignore", message=".*ordering.*")
        yield
