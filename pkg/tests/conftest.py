import numpy as np
import pytest

from torusrw.potential import green


@pytest.fixture(scope="session")
def table():
    """One Green-table build shared by every test that needs g(0) or g(v)."""
    return green(3)


@pytest.fixture(scope="session")
def g0(table):
    return table.g0
