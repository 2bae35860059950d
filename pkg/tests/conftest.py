import numpy as np
import pytest

from entrodim.systems import SubsetSpec, build_system

GOLDEN = SubsetSpec.subshift(["11"])
PHI = (1 + 5 ** 0.5) / 2


@pytest.fixture
def full2():
    return build_system({"family": "full_shift", "alphabet": 2})


@pytest.fixture
def doubling():
    return build_system({"family": "circle_multiply", "m": 2})


@pytest.fixture
def intermittent_half():
    return build_system({"family": "intermittent_symbolic", "m": 2, "exponent": 0.5})


@pytest.fixture
def intermittent_circle_half():
    return build_system({"family": "intermittent_circle", "m": 2, "exponent": 0.5})


@pytest.fixture
def finite3():
    return build_system({"family": "finite",
                         "distances": [[0, 0.2, 0.5], [0.2, 0, 0.3], [0.5, 0.3, 0]],
                         "maps": [[1, 2, 0], [0, 0, 2]]})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
