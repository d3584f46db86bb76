import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from apmqec.codes import build_check_matrices, css_from_dense, load_fixture

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

HAMMING = np.array([[1, 0, 1, 0, 1, 0, 1],
                    [0, 1, 1, 0, 0, 1, 1],
                    [0, 0, 0, 1, 1, 1, 1]], dtype=np.uint8)


@pytest.fixture(scope="session")
def specs():
    return {P: load_fixture(P) for P in (96, 192, 384)}


@pytest.fixture(scope="session")
def code96(specs):
    return build_check_matrices(specs[96])


@pytest.fixture(scope="session")
def steane():
    return css_from_dense(HAMMING, HAMMING)


@pytest.fixture(scope="session")
def code422():
    return css_from_dense([[1, 1, 1, 1]], [[1, 1, 1, 1]])
