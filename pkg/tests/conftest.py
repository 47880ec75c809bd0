import numpy as np
import pytest

from qcommit import protocol as proto


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cfg_d2():
    return proto.ideal_1d_config(d=2, seed=42)


@pytest.fixture
def cfg_d3():
    return proto.ideal_1d_config(d=3, seed=43)
